#include "semiflow/return_time.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semiflow/error.hpp"
#include "semiflow/quadrature.hpp"

namespace semiflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double lorenz_tau(double x, double lambda)
{
    if (!(x > 0.0))
        return inf;
    return -std::log(x) / lambda;
}

// [min, max] of f over [lo, hi]: 1024 samples refined twice near each extremum.
std::pair<double, double> grid_range(const std::function<double(double)>& f, Interval d)
{
    auto refine = [&](bool want_max) {
        double lo = d.lo;
        double hi = d.hi;
        double best = want_max ? -inf : inf;
        for (int level = 0; level < 3; ++level) {
            const int samples = 1024;
            const double step = (hi - lo) / samples;
            double arg = lo;
            for (int k = 0; k <= samples; ++k) {
                double x = lo + k * step;
                if (level == 0 && k == 0)
                    x = lo + 1e-9 * step;
                if (level == 0 && k == samples)
                    x = hi - 1e-9 * step;
                const double v = f(x);
                if (want_max ? v > best : v < best) {
                    best = v;
                    arg = x;
                }
            }
            lo = std::max(d.lo, arg - step);
            hi = std::min(d.hi, arg + step);
        }
        return best;
    };
    return {refine(false), refine(true)};
}

} // namespace

ReturnTime ReturnTime::constant(const PiecewiseMap& map, double value)
{
    if (!(value > 0.0) || !std::isfinite(value))
        throw Error(ErrorKind::parameter, "constant return time must be positive and finite");
    ReturnTime t;
    t.family_ = ReturnTimeFamily::constant;
    t.value_ = value;
    t.bind(map);
    return t;
}

ReturnTime ReturnTime::lorenz_log(const PiecewiseMap& map, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw Error(ErrorKind::parameter, "lorenz_log return time needs lambda > 0");
    if (map.omega().lo < 0.0 || map.omega().hi > 1.0)
        throw Error(ErrorKind::parameter, "lorenz_log return time needs Omega inside (0, 1)");
    ReturnTime t;
    t.family_ = ReturnTimeFamily::lorenz_log;
    t.lambda_ = lambda;
    t.bind(map);
    return t;
}

ReturnTime ReturnTime::explicit_affine(const PiecewiseMap& map, std::vector<AffinePiece> pieces)
{
    if (pieces.empty())
        throw Error(ErrorKind::parameter, "explicit return time needs at least one piece");
    std::sort(pieces.begin(), pieces.end(), [](const AffinePiece& a, const AffinePiece& b) {
        return a.domain.lo < b.domain.lo;
    });
    ReturnTime t;
    t.family_ = ReturnTimeFamily::explicit_affine;
    t.pieces_ = std::move(pieces);
    t.bind(map);
    return t;
}

ReturnTime ReturnTime::explicit_function(const PiecewiseMap& map, std::function<double(double)> tau)
{
    ReturnTime t;
    t.family_ = ReturnTimeFamily::explicit_function;
    t.fn_ = std::move(tau);
    t.bind(map);
    return t;
}

ReturnTime ReturnTime::rebind(const PiecewiseMap& map) const
{
    ReturnTime t = *this;
    t.bind(map);
    return t;
}

const AffinePiece& ReturnTime::piece_at(double x) const
{
    auto it = std::partition_point(pieces_.begin(), pieces_.end(), [&](const AffinePiece& p) {
        return p.domain.hi < x;
    });
    if (it == pieces_.end() || x < it->domain.lo)
        throw Error(ErrorKind::outside_domain, "return time has no piece covering x = " + std::to_string(x));
    return *it;
}

void ReturnTime::bind(const PiecewiseMap& map)
{
    const auto branches = map.branches();
    sup_.assign(branches.size(), 0.0);
    inf_.assign(branches.size(), 0.0);
    for (std::size_t id = 0; id < branches.size(); ++id) {
        const Interval d = branches[id].domain;
        double lo_value = 0.0;
        double hi_value = 0.0;
        switch (family_) {
        case ReturnTimeFamily::constant:
            lo_value = hi_value = value_;
            break;
        case ReturnTimeFamily::lorenz_log:
            lo_value = lorenz_tau(d.lo, lambda_);
            hi_value = lorenz_tau(d.hi, lambda_);
            break;
        case ReturnTimeFamily::explicit_affine: {
            const AffinePiece& p = piece_at(d.midpoint());
            if (d.lo < p.domain.lo - 1e-12 || d.hi > p.domain.hi + 1e-12)
                throw Error(ErrorKind::parameter, "return time piece does not cover branch " + std::to_string(id));
            lo_value = p.slope * d.lo + p.intercept;
            hi_value = p.slope * d.hi + p.intercept;
            break;
        }
        case ReturnTimeFamily::explicit_function: {
            const auto [mn, mx] = grid_range(fn_, d);
            lo_value = mn;
            hi_value = mx;
            break;
        }
        }
        sup_[id] = std::max(lo_value, hi_value);
        inf_[id] = std::min(lo_value, hi_value);
        if (inf_[id] < 0.0 || std::isnan(inf_[id]))
            throw Error(ErrorKind::parameter, "return time is negative on branch " + std::to_string(id));
    }

    tail_.reset();
    if (!map.tail())
        return;
    const TailDescriptor& tail = *map.tail();
    const int first = tail.i_start;
    switch (family_) {
    case ReturnTimeFamily::constant:
        tail_ = TailBounds{value_, 0.0, value_, 0.0};
        break;
    case ReturnTimeFamily::lorenz_log: {
        // geometric domains: -ln of each endpoint is affine in i
        const double slope = -std::log(tail.length_ratio) / lambda_;
        const Interval d = tail.domain(first);
        const double sup_first = lorenz_tau(d.lo, lambda_);
        const double inf_first = lorenz_tau(d.hi, lambda_);
        tail_ = TailBounds{sup_first - slope * first, slope, inf_first - slope * first, slope};
        break;
    }
    case ReturnTimeFamily::explicit_affine:
    case ReturnTimeFamily::explicit_function:
        // no closed form over the tail; sums involving it are reported as unbounded
        break;
    }
}

double ReturnTime::operator()(double x) const
{
    switch (family_) {
    case ReturnTimeFamily::constant:
        return value_;
    case ReturnTimeFamily::lorenz_log:
        return lorenz_tau(x, lambda_);
    case ReturnTimeFamily::explicit_affine: {
        const AffinePiece& p = piece_at(x);
        return p.slope * x + p.intercept;
    }
    case ReturnTimeFamily::explicit_function:
        return fn_(x);
    }
    return 0.0;
}

double ReturnTime::sup() const
{
    double best = sup_.empty() ? 0.0 : *std::max_element(sup_.begin(), sup_.end());
    if (tail_)
        best = tail_->sup_b > 0.0 ? inf : std::max(best, tail_->sup_a);
    return best;
}

Complex ReturnTime::integrate_exp(Complex z, double a, double b) const
{
    if (!(b > a))
        return 0.0;
    switch (family_) {
    case ReturnTimeFamily::constant:
        return std::exp(-z * value_) * (b - a);
    case ReturnTimeFamily::lorenz_log: {
        // e^{-z tau(y)} = y^{z/lambda}; antiderivative y^p / p with p = z/lambda + 1
        const Complex p = z / lambda_ + 1.0;
        if (a <= 0.0) {
            if (p.real() <= 0.0)
                return {inf, 0.0};
            return std::exp(p * std::log(b)) / p;
        }
        const double log_ratio = std::log(b / a);
        return std::exp(p * std::log(a)) * log_ratio * expm1_over(p * log_ratio);
    }
    case ReturnTimeFamily::explicit_affine: {
        const AffinePiece& piece = piece_at(0.5 * (a + b));
        const Complex start = std::exp(-z * (piece.slope * a + piece.intercept));
        return start * (b - a) * expm1_over(-z * piece.slope * (b - a));
    }
    case ReturnTimeFamily::explicit_function:
        return integrate_gl([&](double y) { return std::exp(-z * fn_(y)); }, a, b, 16);
    }
    return 0.0;
}

double ReturnTime::integrate(double a, double b) const
{
    if (!(b > a))
        return 0.0;
    switch (family_) {
    case ReturnTimeFamily::constant:
        return value_ * (b - a);
    case ReturnTimeFamily::lorenz_log: {
        auto anti = [](double y) { return y > 0.0 ? y - y * std::log(y) : 0.0; };
        return (anti(b) - anti(a)) / lambda_;
    }
    case ReturnTimeFamily::explicit_affine: {
        const AffinePiece& p = piece_at(0.5 * (a + b));
        return 0.5 * p.slope * (b * b - a * a) + p.intercept * (b - a);
    }
    case ReturnTimeFamily::explicit_function:
        return integrate_gl(fn_, a, b, 16);
    }
    return 0.0;
}

} // namespace semiflow
