#pragma once

#include <cstddef>
#include <vector>

#include "semiflow/numeric.hpp"
#include "semiflow/suspension.hpp"

namespace semiflow {

struct LaplaceValue {
    Complex value;
    double error_bound = 0.0;     // truncation (series) or time-tail (quadrature) bound
    double spectral_radius = 0.0; // series only
};

/// (1/nu_tau) sum_{n=1}^{n_max} int L_z^n(h0 hat u_{-z}) hat v_z dx on an n_cells Ulam grid.
/// Throws inside-pole-region when the discretized spectral radius is >= 1.
LaplaceValue rho_hat_series(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, Complex z,
                            int n_max, std::size_t n_cells, int quad_n = 32);

/// int_0^{t_max} e^{-z t} rho(t) dt, Gauss-Legendre with n_t nodes on each unit panel. Needs Re z > 0.
LaplaceValue rho_hat_quadrature(const SuspensionSemiflow& sf, const Observable& u, const Observable& v, Complex z,
                                double t_max, int n_t, int quad_n = 16);

struct StripGrid {
    double re_lo = -0.1;
    double re_hi = 0.0;
    double im_lo = -1.0;
    double im_hi = 1.0;
    std::size_t n_re = 2;
    std::size_t n_im = 2;

    Complex node(std::size_t i, std::size_t j) const;
};

void validate(const StripGrid& grid);

struct Pole {
    Complex z;
    double residual = 0.0; // |lambda(z) - 1| after refinement
};

struct ResonanceScan {
    StripGrid grid;
    std::size_t n_cells = 0;
    std::vector<Complex> leading; // eigenvalue nearest 1, row-major in (re, im)
    std::vector<Pole> poles;      // sorted by Im, then Re
    std::vector<Complex> unresolved;
    bool outside_proven_strip = false;
    std::vector<std::string> notes;

    Complex leading_at(std::size_t i, std::size_t j) const { return leading[i * grid.n_im + j]; }
};

struct ScanOptions {
    double sigma = 0.0;          // proven strip half-width; the left edge is clamped to -sigma
    bool override_strip = false; // scan beyond -sigma anyway, marked as outside the proven strip
    double cluster_threshold = 0.1;
    double newton_step = 1e-5;
    int newton_max = 50;
};

/// Eigenvalue nearest 1 of the twisted Ulam matrix at z.
Complex leading_eigenvalue(const SuspensionSemiflow& sf, Complex z, std::size_t n_cells);

ResonanceScan resonance_scan(const SuspensionSemiflow& sf, StripGrid grid, std::size_t n_cells, double refine_tol,
                             const ScanOptions& options);

} // namespace semiflow
