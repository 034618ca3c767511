#include "semiflow/suspension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "semiflow/error.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/quadrature.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

namespace {

// Two Gauss points per density cell. Grid midpoints are dyadic on dyadic
// grids and reach partition points under doubling-type maps in a few steps.
struct BaseNode {
    double x;
    double weight; // h0 * dx
};

std::vector<BaseNode> base_nodes(const GridFunction& h0, std::size_t k)
{
    const double w = h0.cell_width();
    const double lo = h0.omega.lo + static_cast<double>(k) * w;
    const double off = 0.5 / std::sqrt(3.0);
    const double mass = 0.5 * h0.values[k].real() * w;
    return {{lo + (0.5 - off) * w, mass}, {lo + (0.5 + off) * w, mass}};
}

double base_nu_tau(const ReturnTime& tau, const GridFunction& h0)
{
    std::vector<double> parts(h0.size());
    for (std::size_t k = 0; k < h0.size(); ++k)
        for (const BaseNode& b : base_nodes(h0, k))
            parts[k] += b.weight * tau(b.x);
    const double nu = pairwise_sum(std::span<const double>(parts));
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw Error(ErrorKind::parameter, "nu(tau) must be positive and finite");
    return nu;
}

// Gauss-Legendre over [a, b], in panels so that e^{-z s} stays well resolved.
template <class F>
Complex fiber_integral(F&& f, double a, double b, int quad_n, double freq)
{
    if (!(b > a))
        return 0.0;
    const int panels = std::clamp(static_cast<int>(std::ceil((b - a) * std::max(1.0, freq) / (2 * pi))), 1, 256);
    const double h = (b - a) / panels;
    Complex acc = 0.0;
    for (int p = 0; p < panels; ++p)
        acc += integrate_gl(f, a + p * h, a + (p + 1) * h, quad_n);
    return acc;
}

void check_quad(int quad_n)
{
    if (quad_n < 8)
        throw Error(ErrorKind::parameter, "fiber quadrature needs at least 8 nodes");
}

} // namespace

SuspensionSemiflow make_suspension(const PiecewiseMap& map, const ReturnTime& tau, GridFunction h0)
{
    if (h0.omega.lo != map.omega().lo || h0.omega.hi != map.omega().hi)
        throw Error(ErrorKind::parameter, "density grid must cover Omega");
    double mass = 0.0;
    for (const Complex& v : h0.values) {
        if (v.real() < -1e-12 || std::abs(v.imag()) > 1e-12)
            throw Error(ErrorKind::parameter, "density must be real and non-negative");
        mass += v.real() * h0.cell_width();
    }
    if (std::abs(mass - 1.0) > 1e-8)
        throw Error(ErrorKind::parameter, "density must have unit mass");
    const double nu = base_nu_tau(tau.rebind(map), h0);
    return SuspensionSemiflow{map, tau.rebind(map), std::move(h0), nu};
}

SuspensionSemiflow make_suspension(const PiecewiseMap& map, const ReturnTime& tau, std::size_t n_cells)
{
    auto density = invariant_density(map, n_cells, 1e-12);
    return make_suspension(map, tau, std::move(density.density));
}

Observable constant_observable(Complex c)
{
    return {[c](double, double) { return c; }, std::abs(c), 0.0};
}

Observable coordinate_x(const Interval& omega)
{
    return {[](double x, double) { return Complex(x); }, std::max(std::abs(omega.lo), std::abs(omega.hi)), 1.0};
}

Observable fiber_phase(int k)
{
    return {[k](double, double s) { return std::polar(1.0, 2 * pi * k * s); }, 1.0, 2 * pi * std::abs(k)};
}

FlowPoint flow(const SuspensionSemiflow& sf, FlowPoint p, double t)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw Error(ErrorKind::parameter, "flow time must be finite and non-negative");
    if (!sf.map.omega().contains(p.x))
        throw Error(ErrorKind::outside_domain, "flow point outside Omega");
    double roof = sf.tau(p.x);
    if (!(p.s >= 0.0 && p.s < roof))
        throw Error(ErrorKind::parameter, "fiber coordinate must lie in [0, tau(x))");
    double remaining = t;
    std::size_t returns = 0;
    while (p.s + remaining >= roof) {
        if (++returns > max_returns)
            throw Error(ErrorKind::budget, "flow needs more than 10^6 returns");
        remaining -= roof - p.s;
        const auto id = sf.map.find_branch(p.x);
        if (!id)
            throw Error(ErrorKind::orbit_singular, "orbit hits a partition endpoint at x = " + std::to_string(p.x));
        p.x = sf.map.branch(*id).forward(p.x);
        p.s = 0.0;
        if (!sf.map.omega().contains(p.x))
            throw Error(ErrorKind::orbit_singular, "orbit reaches the boundary of Omega");
        roof = sf.tau(p.x);
        remaining = std::max(remaining, 0.0);
    }
    p.s += remaining;
    return p;
}

double birkhoff_tau(const SuspensionSemiflow& sf, double x, int n)
{
    if (n < 0)
        throw Error(ErrorKind::parameter, "Birkhoff length must be non-negative");
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        acc += sf.tau(x);
        if (k + 1 == n)
            break;
        const auto id = sf.map.find_branch(x);
        if (!id)
            throw Error(ErrorKind::orbit_singular, "orbit hits a partition endpoint at x = " + std::to_string(x));
        x = sf.map.branch(*id).forward(x);
    }
    return acc;
}

Complex mu_integrate(const SuspensionSemiflow& sf, const Observable& u, int quad_n)
{
    check_quad(quad_n);
    const std::size_t n = sf.h0.size();
    std::vector<Complex> parts(n);
    parallel_for(n, [&](std::size_t k) {
        for (const BaseNode& b : base_nodes(sf.h0, k))
            if (b.weight != 0.0)
                parts[k] += b.weight * fiber_integral([&](double s) { return u(b.x, s); }, 0.0, sf.tau(b.x), quad_n, 0.0);
    });
    return pairwise_sum(std::span<const Complex>(parts)) / sf.nu_tau;
}

Complex mu_integrate_mc(const SuspensionSemiflow& sf, const Observable& u, std::size_t samples, std::uint64_t seed)
{
    if (samples == 0)
        throw Error(ErrorKind::parameter, "need at least one sample");
    const std::size_t n = sf.h0.size();
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += std::max(0.0, sf.h0.values[k].real());
        cdf[k] = acc;
    }
    constexpr std::size_t block = 4096;
    const std::size_t blocks = (samples + block - 1) / block;
    std::vector<Complex> parts(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const std::size_t count = std::min(block, samples - b * block);
        Complex sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double r = unif(rng) * acc;
            const auto k = std::min<std::size_t>(
                static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin()), n - 1);
            const double x = sf.h0.omega.lo + (static_cast<double>(k) + unif(rng)) * sf.h0.cell_width();
            const double roof = sf.tau(x);
            sum += roof * u(x, unif(rng) * roof);
        }
        parts[b] = sum;
    });
    return pairwise_sum(std::span<const Complex>(parts)) / static_cast<double>(samples) / sf.nu_tau;
}

Correlation correlation(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, double t, int quad_n)
{
    check_quad(quad_n);
    if (!(t >= 0.0))
        throw Error(ErrorKind::parameter, "correlation time must be non-negative");
    const std::size_t n = sf.h0.size();
    std::vector<Complex> a_parts(n);
    std::vector<Complex> b_parts(n);
    parallel_for(n, [&](std::size_t k) {
        for (const BaseNode& b : base_nodes(sf.h0, k)) {
            if (b.weight == 0.0)
                continue;
            const double x = b.x;
            const double roof = sf.tau(x);
            const double cut = std::clamp(roof - t, 0.0, roof);
            auto integrand = [&](double s) {
                const FlowPoint q = flow(sf, {x, s}, t);
                return u(x, s) * v(q.x, q.s);
            };
            // s < cut stays below the roof (B_t); s >= cut has crossed it (A_t)
            b_parts[k] += b.weight * fiber_integral(integrand, 0.0, cut, quad_n, 0.0);
            a_parts[k] += b.weight * fiber_integral(integrand, cut, roof, quad_n, 0.0);
        }
    });
    Correlation c;
    c.rho = pairwise_sum(std::span<const Complex>(a_parts)) / sf.nu_tau;
    c.b_term = pairwise_sum(std::span<const Complex>(b_parts)) / sf.nu_tau;
    c.mean_product = c.rho + c.b_term;
    c.cor = c.mean_product - mu_integrate(sf, u, quad_n) * mu_integrate(sf, v, quad_n);
    return c;
}

BTermDecay b_term_decay(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, double sigma,
                        const std::vector<double>& t_grid, int quad_n)
{
    if (!(sigma > 0.0))
        throw Error(ErrorKind::precondition, "sigma must be positive");
    BTermDecay out;
    const double scale = std::max(u.sup_bound * v.sup_bound, std::numeric_limits<double>::min());
    double log_sum = 0.0;
    int used = 0;
    for (double t : t_grid) {
        const double b = std::abs(correlation(sf, u, v, t, quad_n).b_term);
        out.rows.push_back({t, b, 0.0});
        if (b > 0.0) {
            const double c = b * std::exp(sigma * t) / scale;
            out.c_valid = std::max(out.c_valid, c);
            log_sum += std::log(c);
            ++used;
        }
    }
    out.c_fit = used > 0 ? std::exp(log_sum / used) : 0.0;
    for (auto& row : out.rows)
        row.bound = out.c_valid * scale * std::exp(-sigma * row.t);
    return out;
}

Complex hat_transform_at(const SuspensionSemiflow& sf, const Observable& u, Complex z, double x, int quad_n)
{
    check_quad(quad_n);
    const double roof = sf.tau(x);
    if (!std::isfinite(roof))
        throw Error(ErrorKind::parameter, "return time is infinite at x");
    return fiber_integral([&](double s) { return std::exp(-z * s) * u(x, s); }, 0.0, roof, quad_n, std::abs(z));
}

GridFunction hat_transform(const SuspensionSemiflow& sf, const Observable& u, Complex z, int quad_n)
{
    GridFunction out{sf.h0.omega, std::vector<Complex>(sf.h0.size())};
    parallel_for(out.size(), [&](std::size_t k) { out.values[k] = hat_transform_at(sf, u, z, out.midpoint(k), quad_n); });
    return out;
}

} // namespace semiflow
