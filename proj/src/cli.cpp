#include "semiflow/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "semiflow/error.hpp"
#include "semiflow/gbv_norm.hpp"
#include "semiflow/hypothesis.hpp"
#include "semiflow/io.hpp"
#include "semiflow/laplace_resonances.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/suspension.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* version = "1.0.0";

struct Context {
    const json& config;
    json params;
    fs::path out_dir;
    RunFlags flags;
    std::uint64_t seed = 1;
    json tolerances = json::object();
    std::vector<std::string> outputs;
    json extra = json::object();

    std::ofstream open(const std::string& name)
    {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f)
            throw Error(ErrorKind::io, "cannot write " + (out_dir / name).string());
        outputs.push_back(name);
        return f;
    }
    void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

    double number(const std::string& key, double fallback) { return number_field(params, key, "params", fallback); }
    double number(const std::string& key) { return number_field(params, key, "params"); }
    long integer(const std::string& key, long fallback) { return integer_field(params, key, "params", fallback); }
};

std::string csv(double x)
{
    return format_double(x);
}

Observable observable_from_json(const json& j, const std::string& path, const Interval& omega)
{
    if (!j.is_object())
        throw Error(ErrorKind::config, "field '" + path + "' must be an object");
    const auto& name_field = require_field(j, "name", path);
    if (!name_field.is_string())
        throw Error(ErrorKind::config, "field '" + path + ".name' must be a string");
    const std::string name = name_field.get<std::string>();
    if (name == "const")
        return constant_observable(j.contains("value") ? complex_value(j.at("value"), path + ".value") : Complex(1.0));
    if (name == "coordinate_x")
        return coordinate_x(omega);
    if (name == "fiber_phase")
        return fiber_phase(static_cast<int>(integer_field(j, "k", path, 1)));
    throw Error(ErrorKind::config, "field '" + path + ".name' has unknown value '" + name + "'");
}

Observable observable_param(Context& ctx, const std::string& key, const Interval& omega)
{
    if (!ctx.params.contains(key))
        return constant_observable(1.0);
    return observable_from_json(ctx.params.at(key), "params." + key, omega);
}

std::vector<double> time_grid(Context& ctx)
{
    std::vector<double> ts;
    if (ctx.params.contains("t_grid")) {
        const auto& g = ctx.params.at("t_grid");
        if (!g.is_array() || g.empty())
            throw Error(ErrorKind::config, "field 'params.t_grid' must be a non-empty array");
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!g[k].is_number() || g[k].get<double>() < 0.0)
                throw Error(ErrorKind::config, "field 'params.t_grid[" + std::to_string(k) + "]' must be a number >= 0");
            ts.push_back(g[k].get<double>());
        }
        return ts;
    }
    const double t_max = ctx.number("t_max", 4.0);
    const long n = ctx.integer("n_t", 17);
    if (n < 2 || !(t_max > 0.0))
        throw Error(ErrorKind::config, "field 'params.n_t' must be >= 2 and 'params.t_max' > 0");
    for (long k = 0; k < n; ++k)
        ts.push_back(t_max * static_cast<double>(k) / static_cast<double>(n - 1));
    return ts;
}

Weight weight_param(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    if (!ctx.params.contains("weight"))
        return unit_weight(map);
    const auto& w = ctx.params.at("weight");
    const auto& kind = require_field(w, "kind", "params.weight");
    if (kind == "unit")
        return unit_weight(map);
    if (kind == "twisted")
        return twisted_weight(map, tau, complex_value(require_field(w, "z", "params.weight"), "params.weight.z"));
    throw Error(ErrorKind::config, "field 'params.weight.kind' must be 'unit' or 'twisted'");
}

int task_check(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    json lorenz;
    double alpha = ctx.number("alpha", 0.0);
    const double sigma = ctx.number("sigma");
    if (map.family() == "lorenz" && ctx.params.contains("gamma")) {
        const auto& sys = ctx.config.at("system").at("map");
        const double lambda = number_field(sys, "lambda", "system.map", 1.0);
        const double beta = number_field(sys, "beta", "system.map");
        const auto p = lorenz_params(lambda, beta, ctx.number("gamma"));
        if (!ctx.params.contains("alpha"))
            alpha = p.alpha;
        lorenz = {{"alpha", p.alpha},
                  {"sigma_max", p.sigma_max},
                  {"green", green_condition(sigma, lambda, beta, p.alpha)},
                  {"blue", blue_condition(sigma, lambda, beta, p.alpha)}};
    }
    if (!(alpha > 0.0))
        throw Error(ErrorKind::config, "missing field 'params.alpha' (or 'params.gamma' for the lorenz family)");
    const auto report = check_conditions(map, tau, alpha, sigma, static_cast<int>(ctx.integer("z_samples", 5)));
    json j = to_json(report);
    if (!lorenz.is_null())
        j["lorenz_recipe"] = lorenz;
    ctx.write_json("check.json", j);
    ctx.open("check.txt") << format_report(report);
    std::cout << format_report(report);
    ctx.tolerances["holder_fine_coarse_ratio"] = 1.5;
    return report.verdicts.all() ? exit_ok : exit_verdict;
}

int task_density(Context& ctx, const PiecewiseMap& map)
{
    const auto n = static_cast<std::size_t>(ctx.integer("n_cells", 1024));
    const double tol = ctx.number("tol", 1e-12);
    const auto max_it = static_cast<std::size_t>(ctx.integer("max_iterations", 100000));
    const auto m = ulam_matrix(map, unit_weight(map), n);
    const auto d = invariant_density(m, tol, max_it);
    {
        auto f = ctx.open("density.csv");
        write_csv(f, d.density);
    }
    ctx.tolerances["tol"] = tol;
    ctx.tolerances["max_iterations"] = max_it;
    ctx.extra["iterations"] = d.iterations;
    ctx.extra["residual"] = d.residual;
    ctx.extra["warnings"] = d.warnings;
    ctx.extra["truncation_bound"] = m.truncation_bound;
    if (const long k = ctx.integer("spectrum_k", 0); k > 0) {
        auto f = ctx.open("spectrum.csv");
        write_spectrum_csv(f, spectrum_topk(m, static_cast<std::size_t>(k)));
    }
    if (ctx.params.value("export_matrix", false)) {
        auto c = ctx.open("matrix.csv");
        write_matrix_csv(c, m);
        auto f = ctx.open("matrix.bin");
        write_matrix_binary(f, m);
    }
    return exit_ok;
}

int task_correlation(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    const auto n = static_cast<std::size_t>(ctx.integer("n_cells", 512));
    const int quad_n = static_cast<int>(ctx.integer("quad_n", 32));
    const auto sf = make_suspension(map, tau, n);
    const auto u = observable_param(ctx, "u", map.omega());
    const auto v = observable_param(ctx, "v", map.omega());
    const auto ts = time_grid(ctx);
    const double sigma = ctx.number("sigma", 0.0);
    const double trivial = 2 * u.sup_bound * v.sup_bound;

    std::vector<Correlation> values;
    for (double t : ts)
        values.push_back(correlation(sf, u, v, t, quad_n));

    auto out = ctx.open("correlation.csv");
    out << "t,re,im,abs,bound\n";
    for (std::size_t k = 0; k < ts.size(); ++k)
        out << csv(ts[k]) << ',' << csv(values[k].cor.real()) << ',' << csv(values[k].cor.imag()) << ','
            << csv(std::abs(values[k].cor)) << ',' << csv(trivial) << '\n';

    auto rho = ctx.open("rho.csv");
    rho << "t,re,im,abs,bound\n";
    for (std::size_t k = 0; k < ts.size(); ++k)
        rho << csv(ts[k]) << ',' << csv(values[k].rho.real()) << ',' << csv(values[k].rho.imag()) << ','
            << csv(std::abs(values[k].rho)) << ',' << csv(u.sup_bound * v.sup_bound) << '\n';

    if (sigma > 0.0) {
        const auto decay = b_term_decay(sf, u, v, sigma, ts, quad_n);
        auto b = ctx.open("b_term.csv");
        b << "t,re,im,abs,bound\n";
        for (std::size_t k = 0; k < ts.size(); ++k)
            b << csv(ts[k]) << ',' << csv(values[k].b_term.real()) << ',' << csv(values[k].b_term.imag()) << ','
              << csv(decay.rows[k].b_abs) << ',' << csv(decay.rows[k].bound) << '\n';
        ctx.extra["c_valid"] = decay.c_valid;
        ctx.extra["c_fit"] = decay.c_fit;
    }
    ctx.extra["nu_tau"] = sf.nu_tau;
    ctx.tolerances["quad_n"] = quad_n;
    ctx.tolerances["n_cells"] = n;
    return exit_ok;
}

int task_ly(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    const auto w = weight_param(ctx, map, tau);
    GbvParams p;
    p.alpha = ctx.number("alpha", 0.5);
    p.eps0 = ctx.number("eps0", default_eps0(map));
    LyOptions opt;
    opt.delta = ctx.number("delta", 1.0);
    opt.piecewise_trials = static_cast<std::size_t>(ctx.integer("piecewise_trials", 100));
    opt.holder_trials = static_cast<std::size_t>(ctx.integer("holder_trials", 50));
    opt.n_cells = static_cast<std::size_t>(ctx.integer("n_cells", 1024));
    opt.slack = ctx.number("slack", 0.05);
    opt.seed = ctx.seed;
    const auto r = verify_ly(map, w, p, opt);
    json j = {{"lambda", r.lambda},       {"delta", r.delta},
              {"gamma", r.gamma_const},   {"c_delta", r.c_delta},
              {"eps0_used", r.eps0_used}, {"holder_constant", r.holder_constant},
              {"tail_sum", r.tail_sum},   {"trials", r.trials},
              {"refined_branches", r.refined_branches},
              {"worst_ratio", r.worst_ratio},
              {"violations", r.violations.size()},
              {"notes", r.notes}};
    ctx.write_json("ly_report.json", j);
    auto f = ctx.open("ly_violations.csv");
    f << "trial,lhs,rhs\n";
    for (const auto& v : r.violations)
        f << v.id << ',' << csv(v.lhs) << ',' << csv(v.rhs) << '\n';
    ctx.tolerances["slack"] = opt.slack;
    ctx.tolerances["n_cells"] = opt.n_cells;
    ctx.tolerances["eps0"] = p.eps0;
    return exit_ok;
}

int task_resonances(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    const double alpha = ctx.number("alpha", 0.5);
    const double sigma = ctx.number("sigma");
    const auto report = check_conditions(map, tau, alpha, sigma, static_cast<int>(ctx.integer("z_samples", 3)));
    ctx.write_json("check.json", to_json(report));
    if (!report.verdicts.all() && !ctx.flags.override_strip) {
        std::cerr << "hypothesis check fails for (alpha, sigma); rerun with --override-strip to scan anyway\n";
        return exit_verdict;
    }

    const auto& g = require_field(ctx.params, "grid", "params");
    StripGrid grid;
    const Complex re = complex_value(require_field(g, "re", "params.grid"), "params.grid.re");
    const Complex im = complex_value(require_field(g, "im", "params.grid"), "params.grid.im");
    grid.re_lo = re.real();
    grid.re_hi = re.imag();
    grid.im_lo = im.real();
    grid.im_hi = im.imag();
    grid.n_re = static_cast<std::size_t>(integer_field(g, "n_re", "params.grid", 5));
    grid.n_im = static_cast<std::size_t>(integer_field(g, "n_im", "params.grid", 161));
    validate(grid);

    const auto n = static_cast<std::size_t>(ctx.integer("n_cells", 512));
    const double tol = ctx.number("refine_tol", 1e-10);
    ScanOptions opt;
    opt.sigma = sigma;
    opt.override_strip = ctx.flags.override_strip || !report.verdicts.all();
    opt.cluster_threshold = ctx.number("cluster_threshold", 0.1);
    const auto sf = make_suspension(map, tau, n);
    const auto scan = resonance_scan(sf, grid, n, tol, opt);

    auto f = ctx.open("scan.csv");
    f << "re_z,im_z,re_eig,im_eig,abs_eig_minus_1\n";
    for (std::size_t i = 0; i < scan.grid.n_re; ++i)
        for (std::size_t j = 0; j < scan.grid.n_im; ++j) {
            const Complex z = scan.grid.node(i, j);
            const Complex e = scan.leading_at(i, j);
            f << csv(z.real()) << ',' << csv(z.imag()) << ',' << csv(e.real()) << ',' << csv(e.imag()) << ','
              << csv(std::abs(e - 1.0)) << '\n';
        }
    json poles = json::array();
    for (const auto& p : scan.poles)
        poles.push_back({{"z", {p.z.real(), p.z.imag()}}, {"residual", p.residual}});
    json unresolved = json::array();
    for (const auto& z : scan.unresolved)
        unresolved.push_back({z.real(), z.imag()});
    ctx.write_json("poles.json", {{"poles", poles},
                                  {"unresolved", unresolved},
                                  {"n_cells", n},
                                  {"grid",
                                   {{"re", {scan.grid.re_lo, scan.grid.re_hi}},
                                    {"im", {scan.grid.im_lo, scan.grid.im_hi}},
                                    {"n_re", scan.grid.n_re},
                                    {"n_im", scan.grid.n_im}}},
                                  {"outside_proven_strip", scan.outside_proven_strip},
                                  {"notes", scan.notes}});
    ctx.tolerances["refine_tol"] = tol;
    ctx.tolerances["cluster_threshold"] = opt.cluster_threshold;
    ctx.tolerances["newton_step"] = opt.newton_step;
    ctx.tolerances["n_cells"] = n;
    return exit_ok;
}

int task_rho_hat(Context& ctx, const PiecewiseMap& map, const ReturnTime& tau)
{
    const auto n = static_cast<std::size_t>(ctx.integer("n_cells", 512));
    const int n_max = static_cast<int>(ctx.integer("n_max", 200));
    const double t_max = ctx.number("t_max", 30.0);
    const int n_t = static_cast<int>(ctx.integer("n_t", 6));
    const int quad_n = static_cast<int>(ctx.integer("quad_n", 16));
    const auto sf = make_suspension(map, tau, n);
    const auto u = observable_param(ctx, "u", map.omega());
    const auto v = observable_param(ctx, "v", map.omega());
    const auto& zs = require_field(ctx.params, "z", "params");
    if (!zs.is_array() || zs.empty())
        throw Error(ErrorKind::config, "field 'params.z' must be a non-empty array");

    auto f = ctx.open("rho_hat.csv");
    f << "re_z,im_z,series_re,series_im,series_bound,quad_re,quad_im,quad_bound,abs_diff\n";
    for (std::size_t k = 0; k < zs.size(); ++k) {
        const Complex z = complex_value(zs[k], "params.z[" + std::to_string(k) + "]");
        const auto s = rho_hat_series(sf, u, v, z, n_max, n, quad_n);
        f << csv(z.real()) << ',' << csv(z.imag()) << ',' << csv(s.value.real()) << ',' << csv(s.value.imag()) << ','
          << csv(s.error_bound) << ',';
        if (z.real() > 0.0) {
            const auto q = rho_hat_quadrature(sf, u, v, z, t_max, n_t, quad_n);
            f << csv(q.value.real()) << ',' << csv(q.value.imag()) << ',' << csv(q.error_bound) << ','
              << csv(std::abs(q.value - s.value)) << '\n';
        } else {
            f << ",,,\n";
        }
    }
    ctx.tolerances["n_max"] = n_max;
    ctx.tolerances["t_max"] = t_max;
    ctx.tolerances["n_t"] = n_t;
    ctx.tolerances["quad_n"] = quad_n;
    return exit_ok;
}

} // namespace

int run_task(const std::string& task, const json& config, const fs::path& out_dir, const RunFlags& flags)
{
    const auto start = std::chrono::steady_clock::now();
    if (!config.is_object())
        throw Error(ErrorKind::config, "config must be a JSON object");
    if (config.contains("task") && config.at("task") != task)
        throw Error(ErrorKind::config, "field 'task' disagrees with the task on the command line");
    set_thread_count(flags.threads);
    fs::create_directories(out_dir);

    Context ctx{config, config.value("params", json::object()), out_dir, flags, 1, json::object(), {}, json::object()};
    if (!ctx.params.is_object())
        throw Error(ErrorKind::config, "field 'params' must be an object");
    ctx.seed = static_cast<std::uint64_t>(integer_field(config, "seed", "", 1));

    const auto& system = require_field(config, "system", "config");
    const PiecewiseMap map = map_from_json(require_field(system, "map", "system"));
    const ReturnTime tau = system.contains("tau") ? return_time_from_json(map, system.at("tau"))
                                                  : ReturnTime::constant(map, 1.0);

    int code = exit_ok;
    if (task == "check")
        code = task_check(ctx, map, tau);
    else if (task == "density")
        code = task_density(ctx, map);
    else if (task == "correlation")
        code = task_correlation(ctx, map, tau);
    else if (task == "ly_verify")
        code = task_ly(ctx, map, tau);
    else if (task == "resonances")
        code = task_resonances(ctx, map, tau);
    else if (task == "rho_hat")
        code = task_rho_hat(ctx, map, tau);
    else
        throw Error(ErrorKind::config, "unknown task '" + task + "'");

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest = {{"tool", "semiflow-spectra"},
                     {"version", version},
                     {"task", task},
                     {"config", config},
                     {"seed", ctx.seed},
                     {"threads", thread_count()},
                     {"tolerances", ctx.tolerances},
                     {"results", ctx.extra},
                     {"outputs", ctx.outputs},
                     {"exit_code", code},
                     {"timings", {{"total_seconds", seconds}}}};
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    return code;
}

int run_cli(int argc, char** argv)
{
    CLI::App app{"Transfer operators, correlations and resonances of suspension semiflows", "semiflow-spectra"};
    std::string task;
    std::string config_path;
    std::string output;
    RunFlags flags;
    app.add_option("task", task, "check | density | correlation | ly_verify | resonances | rho_hat")
        ->required()
        ->check(CLI::IsMember({"check", "density", "correlation", "ly_verify", "resonances", "rho_hat"}));
    app.add_option("--config", config_path, "JSON config")->required();
    app.add_option("--output", output, "output directory (default: config output_dir)");
    app.add_option("--threads", flags.threads, "worker threads (default: all cores)");
    app.add_flag("--override-strip", flags.override_strip, "scan beyond the proven strip");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_error;
    }

    try {
        std::ifstream in(config_path);
        if (!in)
            throw Error(ErrorKind::io, "cannot read config " + config_path);
        const json config = json::parse(in);
        if (output.empty()) {
            const auto& dir = require_field(config, "output_dir", "config");
            if (!dir.is_string())
                throw Error(ErrorKind::config, "field 'config.output_dir' must be a string");
            output = dir.get<std::string>();
        }
        return run_task(task, config, output, flags);
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return exit_error;
}

} // namespace semiflow
