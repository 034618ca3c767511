#include "semiflow/interval_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "semiflow/error.hpp"

namespace semiflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string describe(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

Interval sorted_interval(double a, double b)
{
    return a < b ? Interval{a, b} : Interval{b, a};
}

// sup of 1/|f'| on [lo, hi]: 1024 samples, then two refinements around the argmax.
double grid_contraction(const std::function<double(double)>& derivative, Interval domain)
{
    constexpr int samples = 1024;
    double lo = domain.lo;
    double hi = domain.hi;
    double best = 0.0;
    for (int level = 0; level < 3; ++level) {
        const double step = (hi - lo) / samples;
        double arg = lo;
        for (int k = 0; k <= samples; ++k) {
            // stay strictly inside the open domain at the outer level
            double x = lo + k * step;
            if (level == 0 && k == 0)
                x = lo + 1e-9 * step;
            if (level == 0 && k == samples)
                x = hi - 1e-9 * step;
            const double d = std::abs(derivative(x));
            const double value = d == 0.0 ? inf : 1.0 / d;
            if (!(value <= best)) {
                best = value;
                arg = x;
            }
        }
        if (!std::isfinite(best))
            return inf;
        lo = std::max(domain.lo, arg - step);
        hi = std::min(domain.hi, arg + step);
    }
    return best;
}

double geometric_series(double first, double ratio)
{
    if (first == 0.0)
        return 0.0;
    if (!(ratio < 1.0))
        return inf;
    return first / (1.0 - ratio);
}

} // namespace

Interval make_interval(double lo, double hi)
{
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw Error(ErrorKind::parameter, "interval requires finite lo < hi, got (" + describe(lo) + ", " + describe(hi) + ")");
    return {lo, hi};
}

bool Branch::increasing() const
{
    return forward(domain.lo + 0.25 * domain.length()) < forward(domain.lo + 0.75 * domain.length());
}

Branch affine_branch(Interval domain, double slope, double intercept)
{
    domain = make_interval(domain.lo, domain.hi);
    if (slope == 0.0)
        throw Error(ErrorKind::non_expanding_branch, "affine branch with zero slope");
    Branch b;
    b.domain = domain;
    b.image = sorted_interval(slope * domain.lo + intercept, slope * domain.hi + intercept);
    b.forward = [slope, intercept](double x) { return slope * x + intercept; };
    b.derivative = [slope](double) { return slope; };
    b.inverse = [slope, intercept](double y) { return (y - intercept) / slope; };
    b.contraction = 1.0 / std::abs(slope);
    b.shape = BranchShape::affine;
    b.slope = slope;
    b.intercept = intercept;
    return b;
}

Branch power_branch(Interval domain, double exponent)
{
    domain = make_interval(domain.lo, domain.hi);
    if (domain.lo < 0.0)
        throw Error(ErrorKind::parameter, "power branch needs a domain in (0, inf)");
    if (!(exponent > 0.0 && exponent < 1.0))
        throw Error(ErrorKind::parameter, "power branch exponent must lie in (0, 1)");
    Branch b;
    b.domain = domain;
    b.image = {std::pow(domain.lo, exponent), std::pow(domain.hi, exponent)};
    b.forward = [exponent](double x) { return std::pow(x, exponent); };
    b.derivative = [exponent](double x) { return exponent * std::pow(x, exponent - 1.0); };
    b.inverse = [exponent](double y) { return std::pow(y, 1.0 / exponent); };
    // 1/f'(x) = x^{1-beta}/beta is increasing, so the sup sits at the right end
    b.contraction = std::pow(domain.hi, 1.0 - exponent) / exponent;
    b.shape = BranchShape::power;
    b.exponent = exponent;
    return b;
}

Branch general_branch(Interval domain, std::function<double(double)> forward,
                      std::function<double(double)> derivative,
                      std::function<double(double)> inverse)
{
    domain = make_interval(domain.lo, domain.hi);
    Branch b;
    b.domain = domain;
    b.image = sorted_interval(forward(domain.lo), forward(domain.hi));
    b.contraction = grid_contraction(derivative, domain);
    b.forward = std::move(forward);
    b.derivative = std::move(derivative);
    b.inverse = std::move(inverse);
    b.shape = BranchShape::general;
    return b;
}

Branch restrict_branch(const Branch& branch, Interval sub)
{
    sub = make_interval(std::max(sub.lo, branch.domain.lo), std::min(sub.hi, branch.domain.hi));
    Branch b = branch;
    b.domain = sub;
    b.image = sorted_interval(branch.forward(sub.lo), branch.forward(sub.hi));
    switch (branch.shape) {
    case BranchShape::affine:
        break;
    case BranchShape::power:
        b.contraction = std::pow(sub.hi, 1.0 - branch.exponent) / branch.exponent;
        break;
    case BranchShape::general:
        b.contraction = grid_contraction(branch.derivative, sub);
        break;
    }
    return b;
}

double TailDescriptor::contraction(int i) const
{
    return first_contraction * std::pow(contraction_ratio, i - i_start);
}

Interval TailDescriptor::domain(int i) const
{
    switch (family) {
    case TailFamily::lorenz_geometric:
        return {std::exp(-(i + 1.0)), std::exp(-static_cast<double>(i))};
    case TailFamily::lueroth_geometric:
        return {std::ldexp(1.0, -i), std::ldexp(1.0, -i + 1)};
    }
    return {};
}

double TailDescriptor::weighted_sum(double a, double b) const
{
    return geometric_series(first_contraction * std::exp(a + b * i_start), contraction_ratio * std::exp(b));
}

double TailDescriptor::mass_weighted_sum(double a, double b) const
{
    return geometric_series(first_length * std::exp(a + b * i_start), length_ratio * std::exp(b));
}

double TailDescriptor::weighted_sup(double alpha, double a, double b) const
{
    const double first = std::pow(first_contraction, alpha) * std::exp(a + b * i_start);
    const double growth = std::pow(contraction_ratio, alpha) * std::exp(b);
    return growth <= 1.0 ? first : inf;
}

PiecewiseMap::PiecewiseMap(Interval omega, std::vector<Branch> branches,
                           std::optional<TailDescriptor> tail, std::string family)
    : omega_(make_interval(omega.lo, omega.hi)), branches_(std::move(branches)),
      tail_(std::move(tail)), family_(std::move(family))
{
    if (branches_.empty())
        throw Error(ErrorKind::parameter, "map needs at least one branch");
    sorted_.resize(branches_.size());
    std::iota(sorted_.begin(), sorted_.end(), std::size_t{0});
    std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
        return branches_[a].domain.lo < branches_[b].domain.lo;
    });

    const double tol = 1e-12 * std::max(1.0, omega_.length());
    double covered = 0.0;
    for (std::size_t k = 0; k < sorted_.size(); ++k) {
        const Branch& b = branches_[sorted_[k]];
        if (b.domain.lo < omega_.lo - tol || b.domain.hi > omega_.hi + tol)
            throw Error(ErrorKind::parameter, "branch " + std::to_string(sorted_[k]) + " domain leaves Omega");
        if (b.image.lo < omega_.lo - tol || b.image.hi > omega_.hi + tol)
            throw Error(ErrorKind::parameter, "branch " + std::to_string(sorted_[k]) + " image leaves Omega");
        if (k > 0 && branches_[sorted_[k - 1]].domain.hi > b.domain.lo + tol)
            throw Error(ErrorKind::parameter, "branch domains overlap near " + describe(b.domain.lo));
        covered += b.domain.length();
    }
    const double gap = omega_.length() - covered;
    const double declared = tail_ ? tail_->tail_mass : 0.0;
    if (gap > declared + tol)
        throw Error(ErrorKind::parameter, "branch domains leave a gap of " + describe(gap) + " beyond the declared tail mass");
}

const Branch& PiecewiseMap::branch(std::size_t id) const
{
    if (id >= branches_.size())
        throw Error(ErrorKind::parameter, "no branch with id " + std::to_string(id));
    return branches_[id];
}

std::optional<std::size_t> PiecewiseMap::find_branch(double x) const
{
    // first sorted branch with domain.hi > x
    auto it = std::partition_point(sorted_.begin(), sorted_.end(), [&](std::size_t id) {
        return branches_[id].domain.hi <= x;
    });
    if (it != sorted_.end() && branches_[*it].domain.contains(x))
        return *it;
    return std::nullopt;
}

double PiecewiseMap::max_contraction() const
{
    double best = 0.0;
    for (const Branch& b : branches_)
        best = std::max(best, b.contraction);
    if (tail_)
        best = std::max(best, tail_->first_contraction);
    return best;
}

MapValue evaluate_map(const PiecewiseMap& map, double x)
{
    const auto id = map.find_branch(x);
    if (!id)
        throw Error(ErrorKind::outside_domain, "x = " + describe(x) + " is not inside any branch domain");
    return {map.branch(*id).forward(x), *id};
}

double inverse_branch(const PiecewiseMap& map, std::size_t branch_id, double y)
{
    const Branch& b = map.branch(branch_id);
    if (!b.image.contains(y))
        throw Error(ErrorKind::outside_image, "y = " + describe(y) + " is outside the image of branch " + std::to_string(branch_id));
    const double x = b.inverse(y);
    return std::clamp(x, b.domain.lo, b.domain.hi);
}

double branch_contraction(const PiecewiseMap& map, std::size_t branch_id)
{
    const Branch& b = map.branch(branch_id);
    if (!std::isfinite(b.contraction))
        throw Error(ErrorKind::non_expanding_branch, "derivative vanishes on branch " + std::to_string(branch_id));
    return b.contraction;
}

PiecewiseMap make_doubling_map(int k)
{
    if (k < 2)
        throw Error(ErrorKind::parameter, "doubling family needs k >= 2");
    std::vector<Branch> branches;
    for (int j = 0; j < k; ++j)
        branches.push_back(affine_branch({static_cast<double>(j) / k, static_cast<double>(j + 1) / k}, k, -j));
    return PiecewiseMap({0.0, 1.0}, std::move(branches), std::nullopt, "doubling");
}

PiecewiseMap make_tent_map(int slope)
{
    if (slope < 2)
        throw Error(ErrorKind::parameter, "tent family needs slope >= 2");
    std::vector<Branch> branches;
    for (int j = 0; j < slope; ++j) {
        const Interval dom{static_cast<double>(j) / slope, static_cast<double>(j + 1) / slope};
        if (j % 2 == 0)
            branches.push_back(affine_branch(dom, slope, -j));
        else
            branches.push_back(affine_branch(dom, -slope, j + 1));
    }
    return PiecewiseMap({0.0, 1.0}, std::move(branches), std::nullopt, "tent");
}

PiecewiseMap make_lueroth_map(int count)
{
    if (count < 1 || count > 60)
        throw Error(ErrorKind::parameter, "lueroth family needs 1..60 listed branches");
    std::vector<Branch> branches;
    for (int i = 1; i <= count; ++i) {
        const double lo = std::ldexp(1.0, -i);
        const double slope = std::ldexp(1.0, i);
        branches.push_back(affine_branch({lo, 2.0 * lo}, slope, -1.0));
    }
    TailDescriptor tail;
    tail.family = TailFamily::lueroth_geometric;
    tail.i_start = count + 1;
    tail.first_contraction = std::ldexp(1.0, -(count + 1));
    tail.contraction_ratio = 0.5;
    tail.first_length = std::ldexp(1.0, -(count + 1));
    tail.length_ratio = 0.5;
    tail.tail_sum_bound = geometric_series(tail.first_contraction, tail.contraction_ratio);
    tail.tail_mass = std::ldexp(1.0, -count);
    return PiecewiseMap({0.0, 1.0}, std::move(branches), tail, "lueroth");
}

PiecewiseMap make_lorenz_map(double lambda, double beta, int i_max)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorKind::parameter, "lorenz family needs lambda > 0");
    if (!(beta > 0.0 && beta < 1.0))
        throw Error(ErrorKind::parameter, "lorenz family needs beta in (0, 1), got " + describe(beta));
    if (i_max < 1)
        throw Error(ErrorKind::parameter, "lorenz family needs i_max >= 1");
    std::vector<Branch> branches;
    for (int i = 0; i < i_max; ++i)
        branches.push_back(power_branch({std::exp(-(i + 1.0)), std::exp(-static_cast<double>(i))}, beta));
    TailDescriptor tail;
    tail.family = TailFamily::lorenz_geometric;
    tail.lambda = lambda;
    tail.beta = beta;
    tail.i_start = i_max;
    tail.first_contraction = std::exp(-i_max * (1.0 - beta)) / beta;
    tail.contraction_ratio = std::exp(-(1.0 - beta));
    tail.first_length = std::exp(-static_cast<double>(i_max)) * (1.0 - std::exp(-1.0));
    tail.length_ratio = std::exp(-1.0);
    tail.tail_sum_bound = geometric_series(tail.first_contraction, tail.contraction_ratio);
    tail.tail_mass = std::exp(-static_cast<double>(i_max));
    return PiecewiseMap({0.0, 1.0}, std::move(branches), tail, "lorenz");
}

PiecewiseMap refine_partition(const PiecewiseMap& map, double eps0, double gamma)
{
    if (!(eps0 > 0.0))
        throw Error(ErrorKind::parameter, "refine_partition needs eps0 > 0");
    if (!(gamma > 2.0))
        throw Error(ErrorKind::parameter, "refine_partition needs gamma > 2");
    const double window = eps0 * gamma;
    std::vector<Branch> out;
    for (const Branch& b : map.branches()) {
        const double len = b.image.length();
        if (len <= 2.0 * window) {
            out.push_back(b);
            continue;
        }
        const auto pieces = static_cast<std::size_t>(std::ceil(len / (2.0 * window)));
        // equal image lengths; cut points pulled back through the branch inverse
        std::vector<double> cuts(pieces + 1);
        cuts.front() = b.domain.lo;
        cuts.back() = b.domain.hi;
        const bool up = b.increasing();
        for (std::size_t p = 1; p < pieces; ++p) {
            const double y = up ? b.image.lo + len * static_cast<double>(p) / pieces
                                : b.image.hi - len * static_cast<double>(p) / pieces;
            cuts[p] = b.inverse(y);
        }
        for (std::size_t p = 0; p < pieces; ++p)
            out.push_back(restrict_branch(b, {cuts[p], cuts[p + 1]}));
    }
    return PiecewiseMap(map.omega(), std::move(out), map.tail(), map.family());
}

double lorenz_stated_contraction(double beta, int i)
{
    return std::exp(-i * (1.0 - beta));
}

} // namespace semiflow
