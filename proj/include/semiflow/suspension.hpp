#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "semiflow/gbv_norm.hpp"
#include "semiflow/interval_maps.hpp"
#include "semiflow/numeric.hpp"
#include "semiflow/return_time.hpp"

namespace semiflow {

/// Suspension over (Omega, f, tau) together with the a.c.i.m. density h0 of the base map.
/// nu_tau is int tau h0 on the base nodes (two Gauss points per cell), so that mu(1) = 1 on the same nodes.
struct SuspensionSemiflow {
    PiecewiseMap map;
    ReturnTime tau;
    GridFunction h0;
    double nu_tau = 1.0;
};

/// h0 from the Ulam density at n_cells.
SuspensionSemiflow make_suspension(const PiecewiseMap& map, const ReturnTime& tau, std::size_t n_cells);
SuspensionSemiflow make_suspension(const PiecewiseMap& map, const ReturnTime& tau, GridFunction h0);

struct FlowPoint {
    double x = 0.0;
    double s = 0.0;
};

struct Observable {
    std::function<Complex(double, double)> u;
    double sup_bound = 1.0;
    double holder_bound = 0.0;

    Complex operator()(double x, double s) const { return u(x, s); }
};

Observable constant_observable(Complex c);
/// (x, s) -> x on Omega = (lo, hi).
Observable coordinate_x(const Interval& omega);
/// (x, s) -> e^{2 pi i k s}.
Observable fiber_phase(int k = 1);

constexpr std::size_t max_returns = 1'000'000;

/// phi_t(x, s); an exact hit s + t = tau(x) lands on (f(x), 0).
FlowPoint flow(const SuspensionSemiflow& sf, FlowPoint p, double t);
/// sum_{k<n} tau(f^k x).
double birkhoff_tau(const SuspensionSemiflow& sf, double x, int n);

/// (1/nu_tau) int_Omega int_0^{tau(x)} u(x, s) ds h0(x) dx; Gauss base nodes, Gauss-Legendre fiber.
Complex mu_integrate(const SuspensionSemiflow& sf, const Observable& u, int quad_n = 32);
/// Same integral by sampling x ~ h0, s ~ U[0, tau(x)); blocks of 4096 draws with their own seeded stream.
Complex mu_integrate_mc(const SuspensionSemiflow& sf, const Observable& u, std::size_t samples = 1'000'000,
                        std::uint64_t seed = 1);

struct Correlation {
    Complex cor;          // mu(u v o phi_t) - mu(u) mu(v)
    Complex rho;          // part over A_t = {s + t >= tau(x)}
    Complex b_term;       // part over the complement B_t
    Complex mean_product; // mu(u v o phi_t) = rho + b_term
};

/// Fiber rule split at s = tau(x) - t, where v o phi_t jumps.
Correlation correlation(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, double t,
                        int quad_n = 32);

struct BTermRow {
    double t;
    double b_abs;
    double bound;
};

struct BTermDecay {
    std::vector<BTermRow> rows;
    double c_valid = 0.0; // smallest C with |b| <= C sup|u| sup|v| e^{-sigma t} at every t
    double c_fit = 0.0;   // least squares on log scale, slope fixed at -sigma
};

BTermDecay b_term_decay(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, double sigma,
                        const std::vector<double>& t_grid, int quad_n = 32);

/// hat u_z(x) = int_0^{tau(x)} e^{-z s} u(x, s) ds at each cell midpoint of the density grid.
GridFunction hat_transform(const SuspensionSemiflow& sf, const Observable& u, Complex z, int quad_n = 32);
Complex hat_transform_at(const SuspensionSemiflow& sf, const Observable& u, Complex z, double x, int quad_n = 32);

} // namespace semiflow
