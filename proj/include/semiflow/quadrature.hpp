#pragma once

#include <span>
#include <vector>

namespace semiflow {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached rule with n nodes (Newton iteration on P_n). Thread-safe.
const GaussLegendre& gauss_legendre(int n);

/// Integrates f over [a, b] with the n-point rule.
template <class F>
auto integrate_gl(F&& f, double a, double b, int n) -> decltype(f(a))
{
    const GaussLegendre& rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    decltype(f(a)) acc{};
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        acc += rule.weights[k] * f(mid + half * rule.nodes[k]);
    return acc * half;
}

} // namespace semiflow
