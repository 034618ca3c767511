#include "semiflow/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "semiflow/error.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr int iterate_search_limit = 32;
constexpr double fine_coarse_ratio = 1.5;

// Branch whose closed domain holds x; orbits may land on partition points.
std::optional<std::size_t> closed_branch(const PiecewiseMap& map, double x)
{
    if (auto id = map.find_branch(x))
        return id;
    const double tol = 1e-13 * std::max(1.0, map.omega().length());
    for (std::size_t id : map.sorted_ids()) {
        const Interval& d = map.branch(id).domain;
        if (d.lo - tol <= x && x <= d.hi + tol)
            return id;
    }
    return std::nullopt;
}

std::vector<double> uniform_points(const Interval& d)
{
    std::vector<double> pts(64);
    for (int j = 0; j < 64; ++j)
        pts[static_cast<std::size_t>(j)] = d.lo + (j + 0.5) / 64.0 * d.length();
    return pts;
}

double holder_quotient(const std::vector<double>& xs, const std::vector<double>& g, double alpha)
{
    double best = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            best = std::max(best, std::abs(g[i] - g[j]) / std::pow(std::abs(xs[j] - xs[i]), alpha));
    return best;
}

struct HolderVerdict {
    double constant = 0.0;
    bool ok = true;
    std::string reason;
};

// Finite on every branch, no blow-up at fine scales, no growth into the tail.
HolderVerdict holder_verdict(const PiecewiseMap& map, const ReturnTime& tau, double z, double alpha)
{
    const auto fine = branch_holder_constants(map, tau, z, alpha, true);
    const auto coarse = branch_holder_constants(map, tau, z, alpha, false);
    HolderVerdict v;
    for (std::size_t id = 0; id < map.size(); ++id) {
        v.constant = std::max(v.constant, fine[id]);
        if (!std::isfinite(fine[id])) {
            v.ok = false;
            v.reason = "not finite on branch " + std::to_string(id);
            return v;
        }
        if (fine[id] > fine_coarse_ratio * coarse[id] + 1e-12) {
            v.ok = false;
            v.reason = "fine-scale quotient outgrows the coarse one on branch " + std::to_string(id);
        }
    }
    if (v.ok && map.tail() && map.size() >= 4) {
        // tail constants must stay bounded: the deepest listed branch may not outgrow the shallow half
        const auto& ids = map.sorted_ids();
        double shallow = 0.0;
        std::size_t deepest = ids.front();
        for (std::size_t id : ids)
            if (map.branch(id).domain.length() < map.branch(deepest).domain.length())
                deepest = id;
        std::vector<std::size_t> by_length(ids.begin(), ids.end());
        std::sort(by_length.begin(), by_length.end(),
                  [&](std::size_t a, std::size_t b) { return map.branch(a).domain.length() > map.branch(b).domain.length(); });
        for (std::size_t k = 0; k < by_length.size() / 2; ++k)
            shallow = std::max(shallow, fine[by_length[k]]);
        if (fine[deepest] > fine_coarse_ratio * shallow + 1e-12) {
            v.ok = false;
            v.reason = "constants grow towards the tail";
        }
    }
    return v;
}

double expanding_value(double contraction, double alpha, double sigma, double sup_tau)
{
    if (!std::isfinite(sup_tau))
        return inf;
    return std::pow(contraction, alpha) * std::exp(sigma * sup_tau);
}

double expanding_tail(const PiecewiseMap& map, const ReturnTime& tau, double alpha, double sigma)
{
    if (!map.tail())
        return 0.0;
    const auto tb = tau.tail_bounds();
    if (!tb)
        return inf;
    return map.tail()->weighted_sup(alpha, sigma * tb->sup_a, sigma * tb->sup_b);
}

double expanding_sup_of(const PiecewiseMap& map, const ReturnTime& tau, double alpha, double sigma)
{
    double best = expanding_tail(map, tau, alpha, sigma);
    for (std::size_t id = 0; id < map.size(); ++id)
        best = std::max(best, expanding_value(map.branch(id).contraction, alpha, sigma, tau.sup_on_branch(id)));
    return best;
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

nlohmann::json num(double x)
{
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

} // namespace

std::vector<double> branch_holder_constants(const PiecewiseMap& map, const ReturnTime& tau, double z, double alpha,
                                            bool fine)
{
    std::vector<double> out(map.size(), 0.0);
    parallel_for(map.size(), [&](std::size_t id) {
        const Branch& b = map.branch(id);
        const auto xs = fine ? holder_sample_points(b.domain) : uniform_points(b.domain);
        std::vector<double> g(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k)
            g[k] = std::exp(-z * tau(xs[k])) / std::abs(b.derivative(xs[k]));
        for (double v : g)
            if (!std::isfinite(v)) {
                out[id] = inf;
                return;
            }
        out[id] = holder_quotient(xs, g, alpha);
    });
    return out;
}

double iterate_contraction(const PiecewiseMap& map, int n)
{
    if (n < 1)
        throw Error(ErrorKind::parameter, "iterate order must be positive");
    std::vector<double> per_branch(map.size(), 0.0);
    parallel_for(map.size(), [&](std::size_t id) {
        double best = 0.0;
        for (double x0 : holder_sample_points(map.branch(id).domain)) {
            double x = x0;
            double prod = 1.0;
            bool kept = true;
            for (int k = 0; k < n && kept; ++k) {
                const auto b = k == 0 ? std::optional<std::size_t>(id) : map.find_branch(x);
                if (!b) {
                    kept = false;
                    break;
                }
                const Branch& br = map.branch(*b);
                prod /= std::abs(br.derivative(x));
                x = br.forward(x);
            }
            if (kept)
                best = std::max(best, prod);
        }
        per_branch[id] = best;
    });
    return *std::max_element(per_branch.begin(), per_branch.end());
}

PiecewiseMap iterate_map(const PiecewiseMap& map, int n, std::size_t max_branches)
{
    if (n < 1)
        throw Error(ErrorKind::parameter, "iterate order must be positive");
    std::vector<Branch> current(map.branches().begin(), map.branches().end());
    for (int step = 1; step < n; ++step) {
        std::vector<Branch> next;
        for (const Branch& c : current) {
            for (std::size_t id : map.sorted_ids()) {
                const Branch& b = map.branch(id);
                const double lo = std::max(c.image.lo, b.domain.lo);
                const double hi = std::min(c.image.hi, b.domain.hi);
                if (hi - lo <= 1e-14 * map.omega().length())
                    continue;
                if (next.size() == max_branches)
                    throw Error(ErrorKind::budget, "iterate of order " + std::to_string(n) + " needs more than " +
                                                       std::to_string(max_branches) + " branches");
                const double u = c.inverse(lo);
                const double v = c.inverse(hi);
                Interval dom{std::max(std::min(u, v), c.domain.lo), std::min(std::max(u, v), c.domain.hi)};
                auto cf = c.forward;
                auto cd = c.derivative;
                auto ci = c.inverse;
                auto bf = b.forward;
                auto bd = b.derivative;
                auto bi = b.inverse;
                next.push_back(general_branch(
                    dom, [cf, bf](double x) { return bf(cf(x)); },
                    [cf, cd, bd](double x) { return bd(cf(x)) * cd(x); },
                    [ci, bi](double y) { return ci(bi(y)); }));
            }
        }
        current = std::move(next);
    }
    // the tail of f is dropped; its mass becomes an uncovered gap
    double covered = 0.0;
    for (const Branch& b : current)
        covered += b.domain.length();
    std::optional<TailDescriptor> gap;
    if (map.omega().length() - covered > 1e-12 * map.omega().length()) {
        TailDescriptor t;
        t.first_contraction = 0.0;
        t.contraction_ratio = 0.0;
        t.first_length = 0.0;
        t.length_ratio = 0.0;
        t.tail_mass = map.omega().length() - covered;
        gap = t;
    }
    return PiecewiseMap(map.omega(), std::move(current), gap, map.family() + "^" + std::to_string(n));
}

ReturnTime iterate_return_time(const PiecewiseMap& map, const ReturnTime& tau, int n, const PiecewiseMap& iterate)
{
    return ReturnTime::explicit_function(iterate, [map, tau, n](double x) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            acc += tau(x);
            if (k + 1 == n)
                break;
            const auto id = closed_branch(map, x);
            if (!id)
                return inf;
            x = map.branch(*id).forward(x);
        }
        return acc;
    });
}

double exp_tails(const PiecewiseMap& map, const ReturnTime& tau, double sigma)
{
    double total = 0.0;
    for (std::size_t id = 0; id < map.size(); ++id) {
        const Interval& d = map.branch(id).domain;
        const double part = tau.integrate_exp(Complex(-sigma, 0.0), d.lo, d.hi).real();
        if (!std::isfinite(part))
            throw Error(ErrorKind::divergent_tails,
                        "int e^{sigma tau} diverges on branch " + std::to_string(id) + " at sigma = " + fmt(sigma));
        total += part;
    }
    if (map.tail()) {
        const TailDescriptor& t = *map.tail();
        const Interval first = t.domain(t.i_start);
        const bool accumulates_left = t.domain(t.i_start + 1).hi <= first.lo * (1 + 1e-12) + 1e-300 &&
                                      first.lo - map.omega().lo < first.length();
        const auto fam = tau.family();
        if (accumulates_left && (fam == ReturnTimeFamily::constant || fam == ReturnTimeFamily::lorenz_log)) {
            // tail domains tile (omega.lo, first.hi); the closed form is exact there
            const double part = tau.integrate_exp(Complex(-sigma, 0.0), map.omega().lo, first.hi).real();
            if (!std::isfinite(part))
                throw Error(ErrorKind::divergent_tails,
                            "int e^{sigma tau} diverges over the tail at sigma = " + fmt(sigma));
            return total + part;
        }
        const auto tb = tau.tail_bounds();
        if (!tb)
            throw Error(ErrorKind::divergent_tails, "return time has no bound over the tail branches");
        const double tail = map.tail()->mass_weighted_sum(sigma * tb->sup_a, sigma * tb->sup_b);
        if (!std::isfinite(tail))
            throw Error(ErrorKind::divergent_tails, "tail series |omega_i| e^{sigma sup tau_i} does not decay at sigma = " +
                                                        fmt(sigma));
        total += tail;
    }
    return total;
}

LorenzParams lorenz_params(double lambda, double beta, double gamma)
{
    if (!(lambda > 0.0) || !(beta > 0.0 && beta < 1.0) || !(gamma > 0.0 && gamma <= 1.0))
        throw Error(ErrorKind::parameter, "lorenz_params needs lambda > 0, beta in (0,1), gamma in (0,1]");
    LorenzParams p;
    p.alpha = std::min(gamma, (1.0 - beta) / (2.0 - beta));
    p.sigma_max = p.alpha * lambda * (1.0 - beta);
    if (p.sigma_max > lambda * (1.0 - beta - p.alpha) * (1.0 + 1e-12))
        throw Error(ErrorKind::parameter, "sigma_max exceeds lambda (1 - beta - alpha)");
    return p;
}

bool green_condition(double sigma, double lambda, double beta, double alpha)
{
    return sigma < alpha * lambda * (1.0 - beta);
}

bool blue_condition(double sigma, double lambda, double beta, double alpha)
{
    return sigma <= lambda * (1.0 - beta - alpha);
}

HypothesisReport check_conditions(const PiecewiseMap& map, const ReturnTime& tau, double alpha, double sigma,
                                  int z_samples)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::precondition, "sigma must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw Error(ErrorKind::parameter, "alpha must lie in (0, 1]");
    if (z_samples < 1)
        throw Error(ErrorKind::parameter, "need at least one z sample");

    HypothesisReport r;
    r.alpha = alpha;
    r.sigma = sigma;

    // (a) regularity of e^{-z tau}/|f'| for Re z in [-sigma, 0]
    r.verdicts.holder = true;
    for (int j = 0; j < z_samples; ++j) {
        const double z = z_samples == 1 ? -sigma : -sigma * j / (z_samples - 1);
        r.z_samples.push_back(z);
        const auto v = holder_verdict(map, tau, z, alpha);
        r.holder_constants.push_back(v.constant);
        if (!v.ok) {
            r.verdicts.holder = false;
            r.notes.push_back("holder at z = " + fmt(z) + ": " + v.reason);
        }
    }

    // (b) expansion against the twist
    r.expanding_values.resize(map.size());
    for (std::size_t id = 0; id < map.size(); ++id)
        r.expanding_values[id] = expanding_value(map.branch(id).contraction, alpha, sigma, tau.sup_on_branch(id));
    r.expanding_tail = expanding_tail(map, tau, alpha, sigma);
    r.expanding_sup = r.expanding_tail;
    for (std::size_t id : map.sorted_ids()) {
        r.expanding_sup = std::max(r.expanding_sup, r.expanding_values[id]);
    }
    for (std::size_t id = 0; id < map.size(); ++id)
        if (!(r.expanding_values[id] < 1.0)) {
            r.first_failing_branch = id;
            break;
        }
    r.verdicts.expanding = r.expanding_sup < 1.0;
    if (map.tail() && !(r.expanding_tail < 1.0))
        r.notes.push_back("expansion fails on the tail branches (sup " + fmt(r.expanding_tail) + ")");

    // (c) summability
    std::vector<double> terms(map.size());
    for (std::size_t id = 0; id < map.size(); ++id) {
        const double t = tau.sup_on_branch(id);
        terms[id] = std::isfinite(t) ? map.branch(id).contraction * std::exp(sigma * t) : inf;
    }
    r.sum_value = pairwise_sum(std::span<const double>(terms));
    if (map.tail()) {
        const auto tb = tau.tail_bounds();
        r.sum_value += tb ? map.tail()->weighted_sum(sigma * tb->sup_a, sigma * tb->sup_b) : inf;
    }
    r.verdicts.summable = std::isfinite(r.sum_value);

    // exponential tails of the roof
    try {
        r.tails_integral = exp_tails(map, tau, sigma);
        r.verdicts.exp_tails = true;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::divergent_tails)
            throw;
        r.tails_integral = inf;
        r.verdicts.exp_tails = false;
        r.notes.push_back(e.what());
    }

    // an iterate may contract where f itself does not
    r.contraction_sup = map.max_contraction();
    if (r.contraction_sup >= 1.0) {
        double last = inf;
        for (int n = 2; n <= iterate_search_limit; ++n) {
            last = iterate_contraction(map, n);
            if (last < 1.0) {
                r.iterate_suggestion = n;
                break;
            }
        }
        if (!r.iterate_suggestion) {
            r.notes.push_back("sup 1/|f'| = " + fmt(r.contraction_sup) + " and no iterate up to n = " +
                              std::to_string(iterate_search_limit) + " contracts on the listed branches (sup 1/|(f^n)'| = " +
                              fmt(last) + " at n = " + std::to_string(iterate_search_limit) + ")");
        } else {
            const int n = *r.iterate_suggestion;
            try {
                const auto fn = iterate_map(map, n);
                const auto tn = iterate_return_time(map, tau, n, fn);
                for (double a : {alpha, alpha / 2, alpha / 4}) {
                    bool ok = expanding_sup_of(fn, tn, a, sigma) < 1.0;
                    for (double z : r.z_samples)
                        ok = ok && holder_verdict(fn, tn, z, a).ok;
                    if (ok) {
                        r.iterate_alpha = a;
                        break;
                    }
                }
                if (!r.iterate_alpha)
                    r.notes.push_back("iterate f^" + std::to_string(n) + " contracts but fails the conditions down to alpha/4");
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::budget)
                    throw;
                r.notes.push_back(e.what());
            }
        }
    }
    return r;
}

nlohmann::json to_json(const HypothesisReport& r)
{
    nlohmann::json j;
    j["alpha"] = r.alpha;
    j["sigma"] = r.sigma;
    j["z_samples"] = r.z_samples;
    auto arr = [](const std::vector<double>& xs) {
        nlohmann::json a = nlohmann::json::array();
        for (double x : xs)
            a.push_back(num(x));
        return a;
    };
    j["holder_constants"] = arr(r.holder_constants);
    j["expanding_values"] = arr(r.expanding_values);
    j["expanding_tail"] = num(r.expanding_tail);
    j["expanding_sup"] = num(r.expanding_sup);
    j["sum_value"] = num(r.sum_value);
    j["tails_integral"] = num(r.tails_integral);
    j["contraction_sup"] = num(r.contraction_sup);
    j["verdicts"] = {{"holder", r.verdicts.holder},
                     {"expanding", r.verdicts.expanding},
                     {"summable", r.verdicts.summable},
                     {"exp_tails", r.verdicts.exp_tails},
                     {"all", r.verdicts.all()}};
    j["first_failing_branch"] = r.first_failing_branch ? nlohmann::json(*r.first_failing_branch) : nlohmann::json(nullptr);
    j["iterate_suggestion"] = r.iterate_suggestion ? nlohmann::json(*r.iterate_suggestion) : nlohmann::json(nullptr);
    j["iterate_alpha"] = r.iterate_alpha ? nlohmann::json(*r.iterate_alpha) : nlohmann::json(nullptr);
    j["notes"] = r.notes;
    return j;
}

std::string format_report(const HypothesisReport& r)
{
    std::ostringstream os;
    auto yn = [](bool b) { return b ? "pass" : "FAIL"; };
    os << "alpha " << fmt(r.alpha) << "  sigma " << fmt(r.sigma) << '\n';
    os << "holder      " << yn(r.verdicts.holder) << "  max H = "
       << fmt(r.holder_constants.empty() ? 0.0 : *std::max_element(r.holder_constants.begin(), r.holder_constants.end()))
       << '\n';
    os << "expanding   " << yn(r.verdicts.expanding) << "  sup = " << fmt(r.expanding_sup);
    if (r.first_failing_branch)
        os << "  first failing branch " << *r.first_failing_branch;
    os << '\n';
    os << "summable    " << yn(r.verdicts.summable) << "  sum = " << fmt(r.sum_value) << '\n';
    os << "exp tails   " << yn(r.verdicts.exp_tails) << "  int = " << fmt(r.tails_integral) << '\n';
    if (r.iterate_suggestion) {
        os << "iterate     n = " << *r.iterate_suggestion;
        if (r.iterate_alpha)
            os << "  alpha~ = " << fmt(*r.iterate_alpha);
        os << '\n';
    }
    for (const auto& n : r.notes)
        os << "note: " << n << '\n';
    return os.str();
}

} // namespace semiflow
