#include "semiflow/transfer_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "semiflow/error.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/quadrature.hpp"

namespace semiflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double sampled_sup(const std::function<Complex(double)>& fn, const Interval& d)
{
    double best = 0.0;
    for (double x : holder_sample_points(d))
        best = std::max(best, std::abs(fn(x)));
    return best;
}

void fill_twisted(Weight& w, const PiecewiseMap& map)
{
    const double re = w.z.real();
    w.per_branch_sup.resize(map.size());
    for (std::size_t id = 0; id < map.size(); ++id) {
        const double t = re < 0.0 ? w.tau->sup_on_branch(id) : w.tau->inf_on_branch(id);
        w.per_branch_sup[id] = re == 0.0 ? 1.0 : std::exp(-re * t);
    }
    w.tail_log_bound.reset();
    if (map.tail()) {
        if (re == 0.0) {
            w.tail_log_bound = std::pair{0.0, 0.0};
        } else if (auto tb = w.tau->tail_bounds()) {
            w.tail_log_bound = re < 0.0 ? std::pair{-re * tb->sup_a, -re * tb->sup_b}
                                        : std::pair{-re * tb->inf_a, -re * tb->inf_b};
        }
    }
}

double l1_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, double cell)
{
    std::vector<double> d(static_cast<std::size_t>(a.size()));
    for (Eigen::Index k = 0; k < a.size(); ++k)
        d[static_cast<std::size_t>(k)] = std::abs(a[k] - b[k]);
    return cell * pairwise_sum(std::span<const double>(d));
}

double l1_of(const Eigen::VectorXcd& a, double cell)
{
    return l1_distance(a, Eigen::VectorXcd::Zero(a.size()), cell);
}

struct PowerOutcome {
    Eigen::VectorXcd v;
    std::size_t iterations = 0;
    double residual = inf;
    bool converged = false;
};

PowerOutcome power_iterate(const OperatorMatrix& m, Eigen::VectorXcd v, double tol, std::size_t max_iterations)
{
    const double cell = m.omega.length() / static_cast<double>(m.n);
    PowerOutcome out;
    v /= l1_of(v, cell);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        Eigen::VectorXcd next = m.apply(v);
        out.residual = l1_distance(next, v, cell);
        out.iterations = it + 1;
        if (out.residual <= tol) {
            out.converged = true;
            break;
        }
        const double mass = l1_of(next, cell);
        if (!(mass > 0.0))
            throw Error(ErrorKind::no_convergence, "power iteration collapsed to zero");
        v = next / mass;
    }
    out.v = std::move(v);
    return out;
}

} // namespace

Complex Weight::operator()(double x) const
{
    switch (kind) {
    case WeightKind::unit:
        return 1.0;
    case WeightKind::twisted:
        return std::exp(-z * (*tau)(x));
    case WeightKind::explicit_function:
        return fn(x);
    }
    return 0.0;
}

Complex Weight::integrate(double a, double b) const
{
    if (!(b > a))
        return 0.0;
    switch (kind) {
    case WeightKind::unit:
        return b - a;
    case WeightKind::twisted:
        return tau->integrate_exp(z, a, b);
    case WeightKind::explicit_function:
        return integrate_gl(fn, a, b, 16);
    }
    return 0.0;
}

Weight Weight::rebind(const PiecewiseMap& map) const
{
    switch (kind) {
    case WeightKind::unit:
        return unit_weight(map);
    case WeightKind::twisted:
        return twisted_weight(map, tau->rebind(map), z);
    case WeightKind::explicit_function:
        return explicit_weight(map, fn);
    }
    return unit_weight(map);
}

Weight unit_weight(const PiecewiseMap& map)
{
    Weight w;
    w.kind = WeightKind::unit;
    w.per_branch_sup.assign(map.size(), 1.0);
    if (map.tail())
        w.tail_log_bound = std::pair{0.0, 0.0};
    return w;
}

Weight twisted_weight(const PiecewiseMap& map, const ReturnTime& tau, Complex z)
{
    Weight w;
    w.kind = WeightKind::twisted;
    w.z = z;
    w.tau = std::make_shared<const ReturnTime>(tau.rebind(map));
    fill_twisted(w, map);
    return w;
}

Weight explicit_weight(const PiecewiseMap& map, std::function<Complex(double)> xi)
{
    Weight w;
    w.kind = WeightKind::explicit_function;
    w.fn = std::move(xi);
    w.per_branch_sup.resize(map.size());
    for (std::size_t id = 0; id < map.size(); ++id) {
        w.per_branch_sup[id] = sampled_sup(w.fn, map.branch(id).domain);
        if (!std::isfinite(w.per_branch_sup[id]))
            throw Error(ErrorKind::parameter, "weight is unbounded on branch " + std::to_string(id));
    }
    if (map.tail()) {
        // sampled global bound, flat in i
        const double s = sampled_sup(w.fn, map.omega());
        w.tail_log_bound = std::pair{std::log(s), 0.0};
    }
    return w;
}

TransferValue apply_transfer(const PiecewiseMap& map, const Weight& w, const std::function<Complex(double)>& h,
                             double x, double h_sup)
{
    Complex acc = 0.0;
    for (const Branch& b : map.branches()) {
        if (!b.image.contains(x))
            continue;
        const double y = b.inverse(x);
        acc += w(y) * h(y) / std::abs(b.derivative(y));
    }
    return {acc, tail_weighted_sum(map, w) * h_sup};
}

TransferValue apply_transfer(const PiecewiseMap& map, const Weight& w, const GridFunction& h, double x)
{
    return apply_transfer(map, w, [&](double y) { return h.at(y); }, x, sup_norm(h));
}

GridFunction apply_transfer_grid(const PiecewiseMap& map, const Weight& w, const GridFunction& h)
{
    std::vector<Complex> out(h.size());
    parallel_for(h.size(), [&](std::size_t k) {
        out[k] = apply_transfer(map, w, [&](double y) { return h.at(y); }, h.midpoint(k), 0.0).value;
    });
    return make_grid_function(h.omega, std::move(out));
}

OperatorMatrix ulam_matrix(const PiecewiseMap& map, const Weight& w, std::size_t n)
{
    if (n < 2)
        throw Error(ErrorKind::parameter, "ulam_matrix needs n >= 2");
    if (w.per_branch_sup.size() != map.size())
        throw Error(ErrorKind::parameter, "weight was built for a different partition");
    const Interval omega = map.omega();
    const double cell = omega.length() / static_cast<double>(n);
    for (std::size_t id = 0; id < map.size(); ++id)
        if (map.branch(id).image.length() < cell)
            throw Error(ErrorKind::resolution, "image of branch " + std::to_string(id) + " covers less than one cell");

    const auto order = map.sorted_ids();
    const auto cell_lo = [&](std::size_t j) { return omega.lo + static_cast<double>(j) * cell; };
    const auto index_of = [&](double x) {
        return std::clamp<long>(static_cast<long>(std::floor((x - omega.lo) / cell)), 0, static_cast<long>(n) - 1);
    };

    std::vector<std::vector<std::pair<std::size_t, Complex>>> columns(n);
    parallel_for(n, [&](std::size_t k) {
        const double a = cell_lo(k);
        const double b = k + 1 == n ? omega.hi : cell_lo(k + 1);
        auto& col = columns[k];
        // first branch (in domain order) ending after a
        auto it = std::partition_point(order.begin(), order.end(),
                                       [&](std::size_t id) { return map.branch(id).domain.hi <= a; });
        for (; it != order.end() && map.branch(*it).domain.lo < b; ++it) {
            const Branch& br = map.branch(*it);
            const double s_lo = std::max(a, br.domain.lo);
            const double s_hi = std::min(b, br.domain.hi);
            if (!(s_hi > s_lo))
                continue;
            double img_lo = br.forward(s_lo);
            double img_hi = br.forward(s_hi);
            if (img_lo > img_hi)
                std::swap(img_lo, img_hi);
            img_lo = std::max(img_lo, br.image.lo);
            img_hi = std::min(img_hi, br.image.hi);
            if (!(img_hi > img_lo))
                continue;
            const long j_first = index_of(img_lo);
            const long j_last = std::max(j_first, static_cast<long>(std::ceil((img_hi - omega.lo) / cell)) - 1);
            for (long j = j_first; j <= std::min(j_last, static_cast<long>(n) - 1); ++j) {
                const double c_lo = std::max(img_lo, cell_lo(static_cast<std::size_t>(j)));
                const double c_hi = std::min(img_hi, static_cast<std::size_t>(j) + 1 == n
                                                         ? omega.hi
                                                         : cell_lo(static_cast<std::size_t>(j) + 1));
                if (!(c_hi > c_lo))
                    continue;
                double y1 = br.inverse(c_lo);
                double y2 = br.inverse(c_hi);
                if (y1 > y2)
                    std::swap(y1, y2);
                y1 = std::max(y1, s_lo);
                y2 = std::min(y2, s_hi);
                const Complex v = w.integrate(y1, y2) / cell;
                if (v != Complex(0.0))
                    col.emplace_back(static_cast<std::size_t>(j), v);
            }
        }
        std::stable_sort(col.begin(), col.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    });

    std::vector<Eigen::Triplet<Complex>> triplets;
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& [j, v] : columns[k]) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw Error(ErrorKind::parameter, "non-finite Ulam entry in column " + std::to_string(k));
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(k), v);
        }
    OperatorMatrix m;
    m.n = n;
    m.omega = omega;
    m.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.entries.setFromTriplets(triplets.begin(), triplets.end());
    m.entries.makeCompressed();
    m.truncation_bound = tail_weighted_sum(map, w);
    return m;
}

DensityResult invariant_density(const PiecewiseMap& map, std::size_t n, double tol, std::size_t max_iterations)
{
    return invariant_density(ulam_matrix(map, unit_weight(map), n), tol, max_iterations);
}

DensityResult invariant_density(const OperatorMatrix& m, double tol, std::size_t max_iterations)
{
    const auto n = static_cast<Eigen::Index>(m.n);
    const PowerOutcome first = power_iterate(m, Eigen::VectorXcd::Ones(n), tol, max_iterations);
    if (!first.converged)
        throw Error(ErrorKind::no_convergence, "invariant density: residual " + std::to_string(first.residual) +
                                                   " after " + std::to_string(first.iterations) + " iterations");
    DensityResult out;
    out.iterations = first.iterations;
    out.residual = first.residual;

    // a second, generic start reaches the same vector unless eigenvalue 1 is repeated
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> coin(0.5, 1.5);
    Eigen::VectorXcd start(n);
    for (Eigen::Index k = 0; k < n; ++k)
        start[k] = coin(rng);
    const PowerOutcome second = power_iterate(m, start, tol, max_iterations);
    const double cell = m.omega.length() / static_cast<double>(m.n);
    if (second.converged && l1_distance(first.v, second.v, cell) > std::max(1e-6, 100.0 * tol))
        out.warnings.push_back("non-unique-acim: two starts converged to different densities");
    if (!second.converged)
        out.warnings.push_back("uniqueness check did not converge");

    std::vector<Complex> values(m.n);
    for (std::size_t k = 0; k < m.n; ++k)
        values[k] = std::max(0.0, first.v[static_cast<Eigen::Index>(k)].real());
    out.density = make_grid_function(m.omega, std::move(values));
    return out;
}

double tail_weighted_sum(const PiecewiseMap& map, const Weight& w)
{
    if (!map.tail())
        return 0.0;
    if (!w.tail_log_bound)
        return inf;
    return map.tail()->weighted_sum(w.tail_log_bound->first, w.tail_log_bound->second);
}

LambdaBound lambda_bound(const PiecewiseMap& map, const Weight& w, double alpha)
{
    LambdaBound out;
    for (std::size_t id = 0; id < map.size(); ++id) {
        const double sigma = map.branch(id).contraction;
        const double value = w.per_branch_sup[id] == 0.0 ? 0.0 : std::pow(sigma, alpha) * w.per_branch_sup[id];
        if (!out.argmax_branch || value > out.value) {
            out.value = value;
            out.argmax_branch = id;
        }
    }
    if (const auto& tail = map.tail()) {
        const double value = w.tail_log_bound ? tail->weighted_sup(alpha, w.tail_log_bound->first,
                                                                   w.tail_log_bound->second)
                                              : inf;
        if (value > out.value) {
            // geometric tails peak at their first index
            out.value = value;
            out.argmax_branch.reset();
            out.argmax_tail_index = tail->i_start;
        }
    }
    return out;
}

std::vector<double> holder_sample_points(const Interval& d)
{
    std::vector<double> pts;
    const double len = d.length();
    for (int k = 1; k <= 40; ++k) {
        const double step = std::ldexp(len, -k);
        pts.push_back(d.lo + step);
        pts.push_back(d.hi - step);
    }
    for (int j = 0; j < 64; ++j)
        pts.push_back(d.lo + (j + 0.5) / 64.0 * len);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::erase_if(pts, [&](double x) { return !d.contains(x); });
    return pts;
}

double holder_constant(const PiecewiseMap& map, const Weight& w, double alpha)
{
    std::vector<double> per_branch(map.size(), 0.0);
    parallel_for(map.size(), [&](std::size_t id) {
        const Branch& b = map.branch(id);
        const auto xs = holder_sample_points(b.domain);
        std::vector<Complex> g(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k)
            g[k] = w(xs[k]) / std::abs(b.derivative(xs[k]));
        double best = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = i + 1; j < xs.size(); ++j)
                best = std::max(best, std::abs(g[i] - g[j]) / std::pow(xs[j] - xs[i], alpha));
        per_branch[id] = best;
    });
    return per_branch.empty() ? 0.0 : *std::max_element(per_branch.begin(), per_branch.end());
}

double ly_gamma(double delta)
{
    return 32.0 / delta + 2.0;
}

double ly_okey_bound(double delta, double lambda, double holder, double gamma)
{
    if (holder <= 0.0)
        return inf;
    return delta * lambda / (8.0 * (8.0 + delta) * holder * gamma);
}

LyReport verify_ly(const PiecewiseMap& map, const Weight& w, const GbvParams& p, const LyOptions& options)
{
    const Interval omega = map.omega();
    validate(p, omega);
    const double delta = options.delta;
    if (!(delta > 0.0 && delta <= 1.0))
        throw Error(ErrorKind::parameter, "delta must lie in (0, 1]");

    LyReport report;
    report.delta = delta;
    report.gamma_const = ly_gamma(delta);
    report.lambda = lambda_bound(map, w, p.alpha).value;
    report.holder_constant = holder_constant(map, w, p.alpha);
    const double lambda = report.lambda;
    const double gamma = report.gamma_const;

    double min_image = inf;
    for (const Branch& b : map.branches())
        min_image = std::min(min_image, b.image.length());
    const double okey = ly_okey_bound(delta, lambda, report.holder_constant, gamma);
    double eps0 = std::min({p.eps0, min_image / gamma, std::pow(okey, 1.0 / p.alpha)});
    const double cell = omega.length() / static_cast<double>(options.n_cells);
    if (eps0 < 4.0 * cell)
        throw Error(ErrorKind::resolution, "eps0 = " + std::to_string(eps0) +
                                               " required by the partition and Hoelder constraints spans fewer "
                                               "than 4 cells of " + std::to_string(options.n_cells));
    if (eps0 < p.eps0)
        report.notes.push_back("eps0 lowered from " + std::to_string(p.eps0) + " to " + std::to_string(eps0));
    report.eps0_used = eps0;

    const PiecewiseMap refined = refine_partition(map, eps0, gamma);
    const Weight refined_weight = w.rebind(refined);
    report.refined_branches = refined.size();

    report.tail_sum = tail_weighted_sum(refined, refined_weight);
    if (report.tail_sum > lambda * delta / 16.0)
        report.notes.push_back("tail sum exceeds lambda delta / 16; the omitted tail is larger than the proof allows");

    double sigma_max = refined.max_contraction();
    if (refined.tail())
        sigma_max = std::max(sigma_max, refined.tail()->first_contraction);

    // I3: drop the largest-|xi| branches while the dropped mass stays within delta eps0 lambda / 4
    std::vector<std::size_t> ids(refined.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return refined_weight.per_branch_sup[a] > refined_weight.per_branch_sup[b];
    });
    const double budget = delta * eps0 * lambda / 4.0;
    double dropped = 0.0;
    std::size_t first_kept = 0;
    while (first_kept < ids.size()) {
        const std::size_t id = ids[first_kept];
        const double mass = refined.branch(id).contraction * refined_weight.per_branch_sup[id];
        if (dropped + mass > budget)
            break;
        dropped += mass;
        ++first_kept;
    }
    const double sup_i3 = first_kept < ids.size() ? refined_weight.per_branch_sup[ids[first_kept]] : 0.0;

    report.c_delta = 4.0 * (2.0 + delta / 4.0) * report.holder_constant * std::pow(sigma_max, p.alpha) +
                     sup_i3 / (std::pow(eps0, p.alpha) * omega.length()) +
                     lambda * std::pow(eps0, 1.0 - p.alpha) * delta / (4.0 * omega.length());

    const GbvParams used{p.alpha, eps0};
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> where(omega.lo, omega.hi);
    const std::size_t total = options.piecewise_trials + options.holder_trials;
    for (std::size_t id = 0; id < total; ++id) {
        GridFunction h;
        if (id < options.piecewise_trials) {
            const int jumps = std::uniform_int_distribution<int>(0, 32)(rng);
            std::vector<double> cuts(static_cast<std::size_t>(jumps));
            for (double& c : cuts)
                c = where(rng);
            std::sort(cuts.begin(), cuts.end());
            std::vector<double> levels(cuts.size() + 1);
            for (double& v : levels)
                v = unit(rng);
            h = sample_grid_function(omega, options.n_cells, [&](double x) {
                const auto piece = std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin();
                return Complex(levels[static_cast<std::size_t>(piece)]);
            });
        } else {
            const int terms = std::uniform_int_distribution<int>(1, 8)(rng);
            std::vector<std::pair<double, double>> parts(static_cast<std::size_t>(terms));
            for (auto& [a, c] : parts) {
                a = unit(rng);
                c = where(rng);
            }
            h = sample_grid_function(omega, options.n_cells, [&](double x) {
                double acc = 0.0;
                for (const auto& [a, c] : parts)
                    acc += a * std::pow(std::abs(x - c), p.alpha);
                return Complex(acc);
            });
        }
        const GridFunction lh = apply_transfer_grid(map, w, h);
        const double lhs = gbv_norm(lh, used);
        const double rhs = (2.0 + delta) * lambda * gbv_norm(h, used) + report.c_delta * l1_norm(h);
        if (rhs > 0.0)
            report.worst_ratio = std::max(report.worst_ratio, lhs / rhs);
        if (lhs > (1.0 + options.slack) * rhs + 1e-12)
            report.violations.push_back({id, lhs, rhs});
    }
    report.trials = total;
    return report;
}

LyReport verify_ly(const PiecewiseMap& map, const Weight& w, const GbvParams& p, double delta, std::size_t trials)
{
    LyOptions options;
    options.delta = delta;
    options.piecewise_trials = trials;
    options.holder_trials = trials / 2;
    return verify_ly(map, w, p, options);
}

} // namespace semiflow
