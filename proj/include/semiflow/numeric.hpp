#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>

namespace semiflow {

using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Pairwise summation; the result depends only on the input order.
template <class T>
T pairwise_sum(std::span<const T> xs)
{
    if (xs.size() <= 16) {
        T acc{};
        for (const auto& x : xs)
            acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// e^u - 1 without cancellation for small |u|.
inline Complex expm1(Complex u)
{
    const double a = u.real();
    const double b = u.imag();
    const double s = std::sin(0.5 * b);
    return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

/// (e^u - 1) / u, continuous through u = 0.
inline Complex expm1_over(Complex u)
{
    if (std::abs(u) < 1e-5)
        return 1.0 + u * (0.5 + u / 6.0);
    return expm1(u) / u;
}

} // namespace semiflow
