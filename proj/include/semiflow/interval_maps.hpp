#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semiflow {

/// Open interval (lo, hi) of the real line.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    double midpoint() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double x) const noexcept { return lo < x && x < hi; }
};

/// Validating constructor: lo < hi, both finite.
Interval make_interval(double lo, double hi);

enum class BranchShape { affine, power, general };

/// One monotone branch f_i : omega_i -> f(omega_i).
struct Branch {
    Interval domain;
    Interval image;
    std::function<double(double)> forward;
    std::function<double(double)> derivative;
    std::function<double(double)> inverse;
    /// sup over the domain of 1/|f'|; +inf when f' vanishes somewhere.
    double contraction = 0.0;
    BranchShape shape = BranchShape::general;
    double slope = 0.0;     // affine: f(x) = slope * x + intercept
    double intercept = 0.0;
    double exponent = 0.0;  // power: f(x) = x^exponent

    bool increasing() const;
};

Branch affine_branch(Interval domain, double slope, double intercept);
Branch power_branch(Interval domain, double exponent);
/// Contraction by refined grid maximum of 1/|f'| (1024 samples, refined twice near the argmax).
Branch general_branch(Interval domain, std::function<double(double)> forward,
                      std::function<double(double)> derivative,
                      std::function<double(double)> inverse);
/// Same dynamics restricted to a sub-interval of the domain.
Branch restrict_branch(const Branch& branch, Interval sub);

enum class TailFamily { lorenz_geometric, lueroth_geometric };

/// Closed-form description of the countably many branches i >= i_start that are
/// not stored explicitly. Contractions and domain lengths are geometric in i.
struct TailDescriptor {
    TailFamily family = TailFamily::lorenz_geometric;
    double lambda = 1.0;
    double beta = 0.5;
    int i_start = 0;
    double first_contraction = 0.0; // sigma_{i_start}
    double contraction_ratio = 0.0; // sigma_{i+1} / sigma_i
    double first_length = 0.0;      // |omega_{i_start}|
    double length_ratio = 0.0;      // |omega_{i+1}| / |omega_i|
    double tail_sum_bound = 0.0;    // sum of sigma_i over the tail
    double tail_mass = 0.0;         // Lebesgue measure left uncovered by listed branches

    double contraction(int i) const;
    Interval domain(int i) const;
    /// sum_{i >= i_start} sigma_i * exp(a + b i); +inf when divergent.
    double weighted_sum(double a, double b) const;
    /// sum_{i >= i_start} |omega_i| * exp(a + b i); +inf when divergent.
    double mass_weighted_sum(double a, double b) const;
    /// sup_{i >= i_start} sigma_i^alpha * exp(a + b i); +inf when unbounded.
    double weighted_sup(double alpha, double a, double b) const;
};

/// Piecewise monotone map on Omega. Branch ids are positions in `branches()`;
/// domains are pairwise disjoint and every image lies in Omega. Immutable.
class PiecewiseMap {
public:
    PiecewiseMap(Interval omega, std::vector<Branch> branches,
                 std::optional<TailDescriptor> tail = std::nullopt,
                 std::string family = "explicit");

    const Interval& omega() const noexcept { return omega_; }
    std::span<const Branch> branches() const noexcept { return branches_; }
    const Branch& branch(std::size_t id) const;
    std::size_t size() const noexcept { return branches_.size(); }
    const std::optional<TailDescriptor>& tail() const noexcept { return tail_; }
    const std::string& family() const noexcept { return family_; }

    /// Branch whose open domain contains x, if any.
    std::optional<std::size_t> find_branch(double x) const;
    /// Branch ids ordered by domain.lo.
    std::span<const std::size_t> sorted_ids() const noexcept { return sorted_; }
    /// sup over listed branches of 1/|f'|.
    double max_contraction() const;

private:
    Interval omega_;
    std::vector<Branch> branches_;
    std::optional<TailDescriptor> tail_;
    std::string family_;
    std::vector<std::size_t> sorted_;
};

struct MapValue {
    double y;
    std::size_t branch_id;
};

MapValue evaluate_map(const PiecewiseMap& map, double x);
double inverse_branch(const PiecewiseMap& map, std::size_t branch_id, double y);
double branch_contraction(const PiecewiseMap& map, std::size_t branch_id);

/// x -> k x mod 1 on (0, 1).
PiecewiseMap make_doubling_map(int k = 2);
/// Full-branch tent map with `slope` alternating increasing/decreasing branches on (0, 1).
PiecewiseMap make_tent_map(int slope = 2);
/// Affine branches (2^-i, 2^-i+1) -> (0, 1), i = 1..branches, plus a geometric tail.
PiecewiseMap make_lueroth_map(int branches = 40);
/// x -> x^beta on omega_i = (e^-(i+1), e^-i), i < i_max, plus a geometric tail.
PiecewiseMap make_lorenz_map(double lambda, double beta, int i_max);

/// Chops every branch with |f omega| > 2 eps0 gamma into pieces whose image
/// length lies in [eps0 gamma, 2 eps0 gamma]. Forward maps are restricted only.
PiecewiseMap refine_partition(const PiecewiseMap& map, double eps0, double gamma);

/// The estimate e^{-i(1-beta)} quoted in the literature for sup 1/f' on the
/// Lorenz branch i. The true supremum carries an extra factor 1/beta.
double lorenz_stated_contraction(double beta, int i);

} // namespace semiflow
