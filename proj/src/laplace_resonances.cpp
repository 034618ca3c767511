#include "semiflow/laplace_resonances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semiflow/error.hpp"
#include "semiflow/parallel.hpp"
#include "semiflow/quadrature.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

namespace {

std::vector<Complex> hat_on_grid(const SuspensionSemiflow& sf, const Observable& u, Complex z, const GridFunction& grid,
                                 int quad_n)
{
    std::vector<Complex> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) { out[k] = hat_transform_at(sf, u, z, grid.midpoint(k), quad_n); });
    return out;
}

OperatorMatrix twisted_matrix(const SuspensionSemiflow& sf, Complex z, std::size_t n_cells)
{
    return ulam_matrix(sf.map, twisted_weight(sf.map, sf.tau, z), n_cells);
}

} // namespace

LaplaceValue rho_hat_series(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, Complex z,
                            int n_max, std::size_t n_cells, int quad_n)
{
    if (n_max < 0)
        throw Error(ErrorKind::parameter, "n_max must be non-negative");
    const OperatorMatrix m = twisted_matrix(sf, z, n_cells);
    LaplaceValue out;
    out.spectral_radius = spectral_radius(m);
    if (!(out.spectral_radius < 1.0))
        throw Error(ErrorKind::inside_pole_region, "discretized spectral radius " + std::to_string(out.spectral_radius) +
                                                       " >= 1 at this z; the series does not converge");

    GridFunction grid{sf.map.omega(), std::vector<Complex>(n_cells)};
    const auto u_hat = hat_on_grid(sf, u, -z, grid, quad_n);
    const auto v_hat = hat_on_grid(sf, v, z, grid, quad_n);
    Eigen::VectorXcd g(static_cast<Eigen::Index>(n_cells));
    for (std::size_t k = 0; k < n_cells; ++k) {
        const Complex h0 = sf.h0.size() == n_cells ? sf.h0.values[k] : sf.h0.at(grid.midpoint(k));
        g[static_cast<Eigen::Index>(k)] = h0 * u_hat[k];
    }
    const double w = grid.cell_width();
    double g_l1 = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k)
        g_l1 += std::abs(g[k]) * w;
    double v_sup = 0.0;
    for (const Complex& c : v_hat)
        v_sup = std::max(v_sup, std::abs(c));

    std::vector<Complex> terms;
    terms.reserve(static_cast<std::size_t>(n_max));
    std::vector<Complex> products(n_cells);
    for (int n = 1; n <= n_max; ++n) {
        g = m.apply(g);
        for (std::size_t k = 0; k < n_cells; ++k)
            products[k] = g[static_cast<Eigen::Index>(k)] * v_hat[k] * w;
        terms.push_back(pairwise_sum(std::span<const Complex>(products)));
    }
    out.value = pairwise_sum(std::span<const Complex>(terms)) / sf.nu_tau;
    const double r = out.spectral_radius;
    out.error_bound = std::pow(r, n_max + 1) / (1.0 - r) * g_l1 * v_sup / sf.nu_tau;
    return out;
}

LaplaceValue rho_hat_quadrature(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, Complex z,
                                double t_max, int n_t, int quad_n)
{
    if (!(z.real() > 0.0))
        throw Error(ErrorKind::precondition, "time-domain Laplace transform needs Re z > 0");
    if (!(t_max > 0.0) || n_t < 1)
        throw Error(ErrorKind::parameter, "need t_max > 0 and n_t >= 1");
    const int panels = std::max(1, static_cast<int>(std::ceil(t_max)));
    const double h = t_max / panels;
    const GaussLegendre& rule = gauss_legendre(n_t);
    std::vector<Complex> terms;
    terms.reserve(static_cast<std::size_t>(panels) * rule.nodes.size());
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double t = mid + 0.5 * h * rule.nodes[k];
            const Complex rho = correlation(sf, u, v, t, quad_n).rho;
            terms.push_back(0.5 * h * rule.weights[k] * std::exp(-z * t) * rho);
        }
    }
    LaplaceValue out;
    out.value = pairwise_sum(std::span<const Complex>(terms));
    out.error_bound = u.sup_bound * v.sup_bound * std::exp(-z.real() * t_max) / z.real();
    return out;
}

Complex StripGrid::node(std::size_t i, std::size_t j) const
{
    const double re = re_lo + (re_hi - re_lo) * static_cast<double>(i) / static_cast<double>(n_re - 1);
    const double im = im_lo + (im_hi - im_lo) * static_cast<double>(j) / static_cast<double>(n_im - 1);
    return {re, im};
}

void validate(const StripGrid& g)
{
    if (!(g.re_lo < g.re_hi) || !(g.im_lo < g.im_hi))
        throw Error(ErrorKind::parameter, "strip grid ranges must be ordered");
    if (g.n_re < 2 || g.n_im < 2)
        throw Error(ErrorKind::parameter, "strip grid needs at least two nodes per direction");
    if (g.re_hi > 0.0)
        throw Error(ErrorKind::parameter, "strip grid must lie in Re z <= 0");
}

Complex leading_eigenvalue(const SuspensionSemiflow& sf, Complex z, std::size_t n_cells)
{
    return eigenpair_nearest(twisted_matrix(sf, z, n_cells), 1.0).value;
}

ResonanceScan resonance_scan(const SuspensionSemiflow& sf, StripGrid grid, std::size_t n_cells, double refine_tol,
                             const ScanOptions& options)
{
    validate(grid);
    if (!(options.sigma > 0.0))
        throw Error(ErrorKind::precondition, "resonance scan needs the proven sigma > 0");
    if (!(refine_tol > 0.0))
        throw Error(ErrorKind::parameter, "refine_tol must be positive");

    ResonanceScan scan;
    scan.n_cells = n_cells;
    if (grid.re_lo < -options.sigma) {
        if (options.override_strip) {
            scan.outside_proven_strip = true;
            scan.notes.push_back("outside proven strip: Re z down to " + std::to_string(grid.re_lo) + " < -sigma = " +
                                 std::to_string(-options.sigma));
        } else {
            scan.notes.push_back("left edge clamped from " + std::to_string(grid.re_lo) + " to -sigma = " +
                                 std::to_string(-options.sigma));
            grid.re_lo = -options.sigma;
            validate(grid);
        }
    }
    scan.grid = grid;

    const std::size_t count = grid.n_re * grid.n_im;
    scan.leading.resize(count);
    for (std::size_t i = 0; i < grid.n_re; ++i)
        for (std::size_t j = 0; j < grid.n_im; ++j)
            scan.leading[i * grid.n_im + j] = leading_eigenvalue(sf, grid.node(i, j), n_cells);

    // connected clusters of nodes with |lambda - 1| below the threshold
    std::vector<int> label(count, -1);
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t start = 0; start < count; ++start) {
        if (label[start] >= 0 || std::abs(scan.leading[start] - 1.0) >= options.cluster_threshold)
            continue;
        const int id = static_cast<int>(clusters.size());
        clusters.emplace_back();
        std::vector<std::size_t> stack{start};
        label[start] = id;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            clusters.back().push_back(c);
            const std::size_t i = c / grid.n_im;
            const std::size_t j = c % grid.n_im;
            const std::pair<long, long> steps[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
            for (auto [di, dj] : steps) {
                const long ni = static_cast<long>(i) + di;
                const long nj = static_cast<long>(j) + dj;
                if (ni < 0 || nj < 0 || ni >= static_cast<long>(grid.n_re) || nj >= static_cast<long>(grid.n_im))
                    continue;
                const std::size_t nb = static_cast<std::size_t>(ni) * grid.n_im + static_cast<std::size_t>(nj);
                if (label[nb] < 0 && std::abs(scan.leading[nb] - 1.0) < options.cluster_threshold) {
                    label[nb] = id;
                    stack.push_back(nb);
                }
            }
        }
    }

    const double d_re = (grid.re_hi - grid.re_lo) / static_cast<double>(grid.n_re - 1);
    const double d_im = (grid.im_hi - grid.im_lo) / static_cast<double>(grid.n_im - 1);
    std::vector<std::optional<Pole>> refined(clusters.size());
    std::vector<std::optional<Complex>> failed(clusters.size());
    parallel_for(clusters.size(), [&](std::size_t c) {
        const auto& nodes = clusters[c];
        const std::size_t seed = *std::min_element(nodes.begin(), nodes.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(scan.leading[a] - 1.0) < std::abs(scan.leading[b] - 1.0);
        });
        Complex z = grid.node(seed / grid.n_im, seed % grid.n_im);
        Complex g = scan.leading[seed] - 1.0;
        const double h = options.newton_step;
        for (int step = 0; step < options.newton_max && std::abs(g) >= refine_tol; ++step) {
            const Complex dg = (leading_eigenvalue(sf, z + h, n_cells) - leading_eigenvalue(sf, z - h, n_cells)) / (2 * h);
            if (std::abs(dg) == 0.0)
                break;
            z -= g / dg;
            g = leading_eigenvalue(sf, z, n_cells) - 1.0;
        }
        if (std::abs(g) < refine_tol)
            refined[c] = Pole{z, std::abs(g)};
        else
            failed[c] = z;
    });

    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (failed[c]) {
            scan.unresolved.push_back(*failed[c]);
            continue;
        }
        const Pole& p = *refined[c];
        const bool inside = p.z.real() >= grid.re_lo - d_re && p.z.real() <= grid.re_hi + d_re &&
                            p.z.imag() >= grid.im_lo - d_im && p.z.imag() <= grid.im_hi + d_im;
        if (!inside) {
            scan.notes.push_back("a cluster converged outside the scanned region and was dropped");
            continue;
        }
        const bool duplicate = std::any_of(scan.poles.begin(), scan.poles.end(), [&](const Pole& q) {
            return std::abs(q.z - p.z) < std::max(1e-6, 10 * refine_tol);
        });
        if (!duplicate)
            scan.poles.push_back(p);
    }
    auto by_im_re = [](Complex a, Complex b) { return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real(); };
    std::sort(scan.poles.begin(), scan.poles.end(), [&](const Pole& a, const Pole& b) { return by_im_re(a.z, b.z); });
    std::sort(scan.unresolved.begin(), scan.unresolved.end(), by_im_re);
    return scan;
}

} // namespace semiflow
