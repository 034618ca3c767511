#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "semiflow/interval_maps.hpp"
#include "semiflow/numeric.hpp"

namespace semiflow {

enum class ReturnTimeFamily { constant, lorenz_log, explicit_affine, explicit_function };

/// Affine piece of an explicitly given return time: tau(x) = slope x + intercept on `domain`.
struct AffinePiece {
    Interval domain;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Roof function tau over a piecewise map, with per-branch sup/inf for the map
/// it is bound to. Values inside each branch are assumed monotone (true for the
/// built-in families), so branch extrema are read off at the endpoints.
class ReturnTime {
public:
    static ReturnTime constant(const PiecewiseMap& map, double value);
    /// tau(x) = -ln(x) / lambda.
    static ReturnTime lorenz_log(const PiecewiseMap& map, double lambda);
    static ReturnTime explicit_affine(const PiecewiseMap& map, std::vector<AffinePiece> pieces);
    /// Arbitrary evaluator; branch extrema by refined grid search.
    static ReturnTime explicit_function(const PiecewiseMap& map, std::function<double(double)> tau);

    /// Same roof, recomputing per-branch data for another partition of Omega.
    ReturnTime rebind(const PiecewiseMap& map) const;

    ReturnTimeFamily family() const noexcept { return family_; }
    double lambda() const noexcept { return lambda_; }
    double constant_value() const noexcept { return value_; }

    double operator()(double x) const;

    double sup_on_branch(std::size_t id) const { return sup_.at(id); }
    double inf_on_branch(std::size_t id) const { return inf_.at(id); }
    double sup() const;

    /// int_a^b e^{-z tau(y)} dy for [a, b] inside a single branch.
    Complex integrate_exp(Complex z, double a, double b) const;
    /// int_a^b tau(y) dy.
    double integrate(double a, double b) const;

    /// For tail branches i >= i_start: sup tau <= sup_a + sup_b i and inf tau >= inf_a + inf_b i.
    struct TailBounds {
        double sup_a, sup_b, inf_a, inf_b;
    };
    std::optional<TailBounds> tail_bounds() const noexcept { return tail_; }

private:
    ReturnTime() = default;
    void bind(const PiecewiseMap& map);
    const AffinePiece& piece_at(double x) const;

    ReturnTimeFamily family_ = ReturnTimeFamily::constant;
    double value_ = 1.0;
    double lambda_ = 1.0;
    std::vector<AffinePiece> pieces_;
    std::function<double(double)> fn_;
    std::vector<double> sup_;
    std::vector<double> inf_;
    std::optional<TailBounds> tail_;
};

} // namespace semiflow
