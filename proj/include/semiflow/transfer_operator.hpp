#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "semiflow/gbv_norm.hpp"
#include "semiflow/interval_maps.hpp"
#include "semiflow/numeric.hpp"
#include "semiflow/return_time.hpp"

namespace semiflow {

enum class WeightKind { unit, twisted, explicit_function };

/// Weighting xi of the transfer operator, with per-branch sup |xi| for the map
/// it was built against.
struct Weight {
    WeightKind kind = WeightKind::unit;
    Complex z{0.0, 0.0};
    std::shared_ptr<const ReturnTime> tau;
    std::function<Complex(double)> fn;
    std::vector<double> per_branch_sup;
    /// log sup |xi| on tail branch i is at most tail_log_a + tail_log_b * i; unset when unknown.
    std::optional<std::pair<double, double>> tail_log_bound;
    /// Hoelder constant of xi/|f'| at the exponent it was estimated for; 0 until estimated.
    double holder_constant = 0.0;

    Complex operator()(double x) const;
    /// int_a^b xi(y) dy for [a, b] inside one branch.
    Complex integrate(double a, double b) const;
    /// Same weight with per-branch data recomputed for `map` (e.g. a refined partition).
    Weight rebind(const PiecewiseMap& map) const;
};

Weight unit_weight(const PiecewiseMap& map);
/// xi_z = e^{-z tau}.
Weight twisted_weight(const PiecewiseMap& map, const ReturnTime& tau, Complex z);
Weight explicit_weight(const PiecewiseMap& map, std::function<Complex(double)> xi);

/// Ulam discretization on n equal cells: entries(j, k) maps the average of h on
/// cell k to the average of L_xi h on cell j.
struct OperatorMatrix {
    std::size_t n = 0;
    Interval omega;
    Eigen::SparseMatrix<Complex> entries;
    std::string method = "ulam";
    /// Sup-norm bound on the contribution of tail branches left out of the matrix.
    double truncation_bound = 0.0;

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return entries * v; }
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(entries); }
};

struct TransferValue {
    Complex value;
    double error_bound = 0.0;
};

/// (L_xi h)(x) summed over listed branches; error_bound covers the tail
/// branches assuming |h| <= h_sup.
TransferValue apply_transfer(const PiecewiseMap& map, const Weight& w, const std::function<Complex(double)>& h,
                             double x, double h_sup = 1.0);
TransferValue apply_transfer(const PiecewiseMap& map, const Weight& w, const GridFunction& h, double x);
/// L_xi h sampled at the midpoints of h's grid.
GridFunction apply_transfer_grid(const PiecewiseMap& map, const Weight& w, const GridFunction& h);

OperatorMatrix ulam_matrix(const PiecewiseMap& map, const Weight& w, std::size_t n);

struct DensityResult {
    GridFunction density;
    std::vector<std::string> warnings;
    std::size_t iterations = 0;
    double residual = 0.0;
};

DensityResult invariant_density(const PiecewiseMap& map, std::size_t n, double tol = 1e-12,
                                std::size_t max_iterations = 100000);
/// Power iteration on a prebuilt unit-weight matrix.
DensityResult invariant_density(const OperatorMatrix& m, double tol = 1e-12, std::size_t max_iterations = 100000);

/// k largest-modulus eigenvalues, modulus descending. Dense LAPACK for n <= 2048,
/// restarted subspace iteration above.
std::vector<Complex> spectrum_topk(const OperatorMatrix& m, std::size_t k);
std::vector<Complex> dense_eigenvalues(const Eigen::MatrixXcd& a);

struct Eigenpair {
    Complex value;
    Eigen::VectorXcd vector;
    double residual = 0.0; // ||M v - value v|| / ||v||
};

/// Eigenvalue nearest `target` by Arnoldi (Krylov dimension `krylov`), falling
/// back to a dense solve when the Ritz residual exceeds `tol`.
Eigenpair eigenpair_nearest(const OperatorMatrix& m, Complex target, std::size_t krylov = 40, double tol = 1e-9);
/// Largest eigenvalue modulus: dense for n <= 256, restarted Arnoldi above.
double spectral_radius(const OperatorMatrix& m, double tol = 1e-9);

struct LambdaBound {
    double value = 0.0;
    std::optional<std::size_t> argmax_branch;
    std::optional<int> argmax_tail_index;
};

/// sup_i sigma_i^alpha sup_{omega_i} |xi| over listed branches and the tail.
LambdaBound lambda_bound(const PiecewiseMap& map, const Weight& w, double alpha);

/// Sum over the tail of sigma_i sup|xi|; 0 without a tail, +inf when unknown or divergent.
double tail_weighted_sum(const PiecewiseMap& map, const Weight& w);

/// Stratified sample points of a branch domain: geometric towards both ends plus a uniform grid.
std::vector<double> holder_sample_points(const Interval& d);
/// max over branches and sampled pairs of |g(x) - g(y)| / |x - y|^alpha, g = xi / |f'|.
double holder_constant(const PiecewiseMap& map, const Weight& w, double alpha);

struct LyViolation {
    std::size_t id;
    double lhs;
    double rhs;
};

struct LyReport {
    double lambda = 0.0;
    double delta = 0.0;
    double gamma_const = 0.0;
    double c_delta = 0.0;
    double eps0_used = 0.0;
    double holder_constant = 0.0;
    double tail_sum = 0.0;
    std::size_t trials = 0;
    std::size_t refined_branches = 0;
    /// Largest lhs / rhs seen over all trials.
    double worst_ratio = 0.0;
    std::vector<LyViolation> violations;
    std::vector<std::string> notes;
};

struct LyOptions {
    double delta = 1.0;
    std::size_t piecewise_trials = 100;
    std::size_t holder_trials = 50;
    std::size_t n_cells = 1024;
    std::uint64_t seed = 1;
    double slack = 0.05;
};

/// Empirical check of ||L h|| <= (2+delta) lambda ||h|| + C_delta |h|_1 on random
/// piecewise-constant and sampled-Hoelder h.
LyReport verify_ly(const PiecewiseMap& map, const Weight& w, const GbvParams& p, const LyOptions& options);
LyReport verify_ly(const PiecewiseMap& map, const Weight& w, const GbvParams& p, double delta, std::size_t trials);

/// Gamma = 32/delta + 2.
double ly_gamma(double delta);
/// Ceiling on eps0^alpha: delta lambda / (8 (8 + delta) H Gamma); +inf when H = 0.
double ly_okey_bound(double delta, double lambda, double holder, double gamma);

} // namespace semiflow
