#include "doctest.h"

#include <cmath>
#include <random>

#include "semiflow/error.hpp"
#include "semiflow/laplace_resonances.hpp"
#include "semiflow/transfer_operator.hpp"

using namespace semiflow;

namespace {

SuspensionSemiflow doubling_unit_roof(std::size_t n = 128)
{
    const auto map = make_doubling_map();
    return make_suspension(map, ReturnTime::constant(map, 1.0), n);
}

// rho(t) = min(t, 1) for u = v = 1 on the unit roof, so the transform is (1 - e^{-z}) / z^2
Complex closed_form(Complex z)
{
    return (1.0 - std::exp(-z)) / (z * z);
}

} // namespace

TEST_CASE("series trivial cases")
{
    const auto sf = doubling_unit_roof();
    const auto one = constant_observable(1.0);
    const auto zero = constant_observable(0.0);
    CHECK(std::abs(rho_hat_series(sf, zero, one, 0.5, 40, 128).value) == 0.0);
    CHECK(std::abs(rho_hat_series(sf, one, one, 0.5, 0, 128).value) == 0.0);
}

TEST_CASE("series closed form on the unit roof")
{
    const auto sf = doubling_unit_roof();
    const auto one = constant_observable(1.0);
    const double z = 0.5;
    const Complex expected = (std::exp(z) - 1) / z * ((1 - std::exp(-z)) / z) * std::exp(-z) / (1 - std::exp(-z));
    const auto s = rho_hat_series(sf, one, one, z, 80, 128);
    CHECK(std::abs(s.value - expected) <= 1e-10);
    CHECK(std::abs(s.value - closed_form(z)) <= 1e-10);
    CHECK(s.spectral_radius == doctest::Approx(std::exp(-z)));

    // halving n_max moves the value by less than the attached bound
    const auto half = rho_hat_series(sf, one, one, z, 40, 128);
    // the bound is attained here up to rounding of the two sums
    CHECK(std::abs(half.value - s.value) <= half.error_bound + 1e-14);
}

TEST_CASE("series refuses the pole region")
{
    const auto sf = doubling_unit_roof();
    const auto one = constant_observable(1.0);
    try {
        rho_hat_series(sf, one, one, Complex(-0.1, 0.0), 20, 128);
        FAIL("expected inside-pole-region");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::inside_pole_region);
    }
}

TEST_CASE("time-domain quadrature")
{
    const auto sf = doubling_unit_roof(64);
    const auto one = constant_observable(1.0);
    CHECK_THROWS_AS(rho_hat_quadrature(sf, one, one, Complex(0.0, 1.0), 10.0, 8), Error);
    CHECK(std::abs(rho_hat_quadrature(sf, constant_observable(0.0), one, 0.5, 5.0, 4).value) == 0.0);

    // large Re z sees rho near t = 0, where rho(t) = t
    const auto fast = rho_hat_quadrature(sf, one, one, 50.0, 1.0, 8);
    CHECK(std::abs(fast.value - 0.0 / 50.0) <= 2.0 / 2500.0);

    const auto q = rho_hat_quadrature(sf, one, one, 0.5, 30.0, 4);
    CHECK(std::abs(q.value - closed_form(0.5)) <= 1e-6 + q.error_bound);
}

TEST_CASE("series and quadrature agree for smooth observables")
{
    const auto map = make_doubling_map();
    const auto sf = make_suspension(map, ReturnTime::explicit_function(map, [](double x) { return 1.0 + 0.3 * x; }), 256);
    const Observable u{[](double x, double s) { return Complex(1.0 + 0.5 * std::cos(2 * pi * x) + 0.2 * s); }, 1.8, 0.0};
    const Observable v{[](double x, double) { return Complex(1.0 + x * x); }, 2.0, 0.0};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> re(0.3, 1.0);
    std::uniform_real_distribution<double> im(-2.0, 2.0);
    for (int k = 0; k < 5; ++k) {
        const Complex z(re(rng), im(rng));
        const auto s = rho_hat_series(sf, u, v, z, 200, 1024, 16);
        const auto q = rho_hat_quadrature(sf, u, v, z, 30.0, 6, 16);
        CHECK(std::abs(s.value - q.value) <= 1e-3 * (1 + std::abs(s.value)));
    }
    // conjugate symmetry for real observables
    const Complex z(0.6, 1.3);
    const auto a = rho_hat_series(sf, u, v, z, 100, 512, 16).value;
    const auto b = rho_hat_series(sf, u, v, std::conj(z), 100, 512, 16).value;
    CHECK(std::abs(a - std::conj(b)) <= 1e-10 * (1 + std::abs(a)));
}

TEST_CASE("z = 0 eigenvector is the invariant density")
{
    const auto map = make_tent_map(3);
    const auto sf = make_suspension(map, ReturnTime::explicit_function(map, [](double x) { return 0.5 + x; }), 256);
    const auto m = ulam_matrix(map, twisted_weight(map, sf.tau, 0.0), 256);
    auto pair = eigenpair_nearest(m, 1.0);
    CHECK(std::abs(pair.value - 1.0) <= 1e-10);
    const Complex mass = pair.vector.sum() / 256.0;
    const auto density = invariant_density(map, 256);
    double l1 = 0.0;
    for (std::size_t k = 0; k < 256; ++k)
        l1 += std::abs(pair.vector[static_cast<Eigen::Index>(k)] / mass - density.density.values[k]) / 256.0;
    CHECK(l1 <= 1e-8);
}

TEST_CASE("resonance scan on the unit roof")
{
    const auto sf = doubling_unit_roof(128);
    StripGrid grid{-0.2, 0.0, -8.0, 8.0, 3, 161};
    ScanOptions opt;
    opt.sigma = 0.2;
    const auto scan = resonance_scan(sf, grid, 128, 1e-10, opt);
    REQUIRE(scan.poles.size() == 3);
    CHECK(std::abs(scan.poles[0].z - Complex(0, -2 * pi)) <= 1e-6);
    CHECK(std::abs(scan.poles[1].z) <= 1e-6);
    CHECK(std::abs(scan.poles[2].z - Complex(0, 2 * pi)) <= 1e-6);
    CHECK(scan.unresolved.empty());
    // near the real axis the eigenvalue nearest 1 is e^{-z}
    const Complex z = scan.grid.node(1, 80);
    CHECK(std::abs(scan.leading_at(1, 80) - std::exp(-z)) <= 1e-9);

    const auto empty = resonance_scan(sf, {-0.05, -0.01, 1.0, 2.0, 3, 11}, 128, 1e-10, opt);
    CHECK(empty.poles.empty());
}

TEST_CASE("strip clamping")
{
    const auto sf = doubling_unit_roof(64);
    ScanOptions opt;
    opt.sigma = 0.1;
    const auto clamped = resonance_scan(sf, {-0.5, 0.0, -1.0, 1.0, 3, 5}, 64, 1e-10, opt);
    CHECK(clamped.grid.re_lo == doctest::Approx(-0.1));
    CHECK_FALSE(clamped.outside_proven_strip);
    opt.override_strip = true;
    const auto wide = resonance_scan(sf, {-0.5, 0.0, -1.0, 1.0, 3, 5}, 64, 1e-10, opt);
    CHECK(wide.grid.re_lo == -0.5);
    CHECK(wide.outside_proven_strip);
    CHECK(wide.poles.size() == 1);
    opt.sigma = 0.0;
    CHECK_THROWS_AS(resonance_scan(sf, {-0.5, 0.0, -1.0, 1.0, 3, 5}, 64, 1e-10, opt), Error);
    CHECK_THROWS_AS(validate(StripGrid{0.0, -0.1, 0, 1, 2, 2}), Error);
}
