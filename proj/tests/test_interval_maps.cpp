#include "doctest.h"

#include <cmath>
#include <random>

#include "semiflow/error.hpp"
#include "semiflow/interval_maps.hpp"
#include "semiflow/return_time.hpp"

using namespace semiflow;

namespace {

// plain composite midpoint rule, independent of the library quadrature
template <class F>
auto midpoint_rule(F f, double a, double b, int panels)
{
    const double h = (b - a) / panels;
    decltype(f(a)) acc{};
    for (int k = 0; k < panels; ++k)
        acc += f(a + (k + 0.5) * h);
    return acc * h;
}

} // namespace

TEST_CASE("doubling map evaluates and inverts")
{
    const auto map = make_doubling_map();
    CHECK(map.size() == 2);
    const auto v = evaluate_map(map, 0.3);
    CHECK(v.y == doctest::Approx(0.6));
    CHECK(v.branch_id == 0);
    CHECK(evaluate_map(map, 0.8).y == doctest::Approx(0.6));
    CHECK(evaluate_map(map, 0.8).branch_id == 1);
    CHECK(inverse_branch(map, 1, 0.5) == doctest::Approx(0.75));
    CHECK(branch_contraction(map, 0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(evaluate_map(map, 1.5), Error);
    CHECK_THROWS_AS(evaluate_map(map, 0.5), Error);
    CHECK_THROWS_AS(inverse_branch(map, 0, 1.2), Error);
}

TEST_CASE("errors carry their kind")
{
    const auto map = make_doubling_map();
    try {
        evaluate_map(map, -0.1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::outside_domain);
    }
    try {
        inverse_branch(map, 0, 2.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::outside_image);
    }
}

TEST_CASE("tent map branches alternate orientation")
{
    const auto map = make_tent_map();
    CHECK(map.branch(0).increasing());
    CHECK_FALSE(map.branch(1).increasing());
    CHECK(evaluate_map(map, 0.75).y == doctest::Approx(0.5));
    CHECK(inverse_branch(map, 1, 0.5) == doctest::Approx(0.75));
}

TEST_CASE("forward and inverse agree on every branch")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (const auto& map : {make_doubling_map(3), make_tent_map(4), make_lueroth_map(20), make_lorenz_map(1.0, 0.5, 12)}) {
        for (std::size_t id = 0; id < map.size(); ++id) {
            const Branch& b = map.branch(id);
            const double x = b.domain.lo + u(rng) * b.domain.length();
            CHECK(b.inverse(b.forward(x)) == doctest::Approx(x).epsilon(1e-12));
            // derivative against a central difference
            const double h = 1e-6 * b.domain.length();
            const double fd = (b.forward(x + h) - b.forward(x - h)) / (2 * h);
            CHECK(b.derivative(x) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("lueroth tail accounts for the uncovered mass")
{
    const auto map = make_lueroth_map(40);
    REQUIRE(map.tail());
    CHECK(map.tail()->i_start == 41);
    CHECK(map.tail()->tail_mass == doctest::Approx(std::ldexp(1.0, -40)));
    // sum of sigma_i over i >= 41 is 2^-40
    CHECK(map.tail()->weighted_sum(0.0, 0.0) == doctest::Approx(std::ldexp(1.0, -40)));
    CHECK(evaluate_map(map, 0.3).y == doctest::Approx(4 * 0.3 - 1));
}

TEST_CASE("lorenz contraction carries the 1/beta factor")
{
    const double beta = 0.5;
    const auto map = make_lorenz_map(1.0, beta, 10);
    for (int i = 0; i < 10; ++i) {
        // sup over (e^-(i+1), e^-i) of x^(1-beta)/beta is at the right end
        const double expected = std::exp(-i * (1 - beta)) / beta;
        CHECK(map.branch(i).contraction == doctest::Approx(expected));
        CHECK(lorenz_stated_contraction(beta, i) == doctest::Approx(expected * beta));
    }
    CHECK(map.tail()->contraction(10) == doctest::Approx(std::exp(-5.0) / beta));
    CHECK(map.max_contraction() == doctest::Approx(2.0));
}

TEST_CASE("general branches estimate the contraction by grid search")
{
    const Branch b = general_branch(
        {0.0, 1.0}, [](double x) { return 0.5 * (x + x * x); }, [](double x) { return 0.5 * (1 + 2 * x); },
        [](double y) { return 0.5 * (-1 + std::sqrt(1 + 8 * y)); });
    CHECK(b.contraction == doctest::Approx(2.0).epsilon(1e-6));
    const auto map = PiecewiseMap({0.0, 1.0}, {b});
    CHECK(evaluate_map(map, 0.5).y == doctest::Approx(0.375));
}

TEST_CASE("invalid partitions are rejected")
{
    CHECK_THROWS_AS(make_interval(1.0, 0.0), Error);
    CHECK_THROWS_AS(PiecewiseMap({0.0, 1.0}, {affine_branch({0.0, 0.6}, 1.5, 0.0), affine_branch({0.5, 1.0}, 2.0, -1.0)}),
                    Error);
    CHECK_THROWS_AS(PiecewiseMap({0.0, 1.0}, {affine_branch({0.0, 0.5}, 3.0, 0.0)}), Error);
    CHECK_THROWS_AS(make_lorenz_map(1.0, 1.5, 5), Error);
}

TEST_CASE("refine_partition keeps image lengths inside [eps0 gamma, 2 eps0 gamma]")
{
    const auto map = make_doubling_map();
    const double eps0 = 0.01;
    const double gamma = 10.0;
    const auto refined = refine_partition(map, eps0, gamma);
    CHECK(refined.size() == 10);
    for (const Branch& b : refined.branches()) {
        CHECK(b.image.length() >= eps0 * gamma - 1e-12);
        CHECK(b.image.length() <= 2 * eps0 * gamma + 1e-12);
    }
    // same dynamics
    for (double x : {0.05, 0.33, 0.61, 0.97})
        CHECK(evaluate_map(refined, x).y == doctest::Approx(evaluate_map(map, x).y));

    const auto tent = refine_partition(make_tent_map(), 0.02, 10.0);
    for (const Branch& b : tent.branches())
        CHECK(b.image.length() <= 0.4 + 1e-12);
    CHECK(evaluate_map(tent, 0.7).y == doctest::Approx(0.6));
}

TEST_CASE("return time families")
{
    const auto doubling = make_doubling_map();
    const auto one = ReturnTime::constant(doubling, 1.0);
    CHECK(one(0.3) == 1.0);
    CHECK(one.sup() == 1.0);
    CHECK(std::abs(one.integrate_exp({0.5, 0.0}, 0.2, 0.4) - 0.2 * std::exp(-0.5)) < 1e-15);

    const auto log_tau = ReturnTime::lorenz_log(doubling, 1.0);
    CHECK(log_tau(0.3) == doctest::Approx(-std::log(0.3)));
    CHECK(log_tau.inf_on_branch(1) == doctest::Approx(0.0));
    CHECK(log_tau.sup_on_branch(1) == doctest::Approx(std::log(2.0)));
    CHECK(std::isinf(log_tau.sup_on_branch(0)));
    CHECK_THROWS_AS(ReturnTime::constant(doubling, -1.0), Error);
}

TEST_CASE("closed-form weight integrals match a brute-force rule")
{
    const auto lorenz = make_lorenz_map(1.0, 0.5, 8);
    const auto tau = ReturnTime::lorenz_log(lorenz, 0.7);
    for (Complex z : {Complex(0.3, 0.0), Complex(-0.15, 2.0), Complex(1e-9, 0.0), Complex(-0.7, 0.0)}) {
        const double a = 0.05;
        const double b = 0.12;
        const Complex exact = tau.integrate_exp(z, a, b);
        const Complex brute = midpoint_rule([&](double y) { return std::exp(-z * tau(y)); }, a, b, 200000);
        CHECK(std::abs(exact - brute) < 1e-10);
    }
    CHECK(tau.integrate(0.1, 0.5) ==
          doctest::Approx(midpoint_rule([&](double y) { return tau(y); }, 0.1, 0.5, 200000)).epsilon(1e-9));
    // from zero: int_0^1 x^{z/lambda} dx = 1/(1 + z/lambda)
    CHECK(std::abs(tau.integrate_exp({-0.35, 0.0}, 0.0, 1.0) - 1.0 / (1.0 - 0.5)) < 1e-12);

    const auto affine = ReturnTime::explicit_affine(make_doubling_map(), {{{0.0, 0.5}, 2.0, 1.0}, {{0.5, 1.0}, -1.0, 3.0}});
    CHECK(affine(0.75) == doctest::Approx(2.25));
    CHECK(affine.sup_on_branch(0) == doctest::Approx(2.0));
    const Complex z(0.4, -1.1);
    const Complex brute = midpoint_rule([&](double y) { return std::exp(-z * affine(y)); }, 0.6, 0.9, 100000);
    CHECK(std::abs(affine.integrate_exp(z, 0.6, 0.9) - brute) < 1e-10);

    const auto fn = ReturnTime::explicit_function(make_doubling_map(), [](double x) { return 1.0 + x * x; });
    CHECK(fn.sup_on_branch(1) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(fn.inf_on_branch(0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("lorenz-log tail bounds are affine in the branch index")
{
    const auto map = make_lorenz_map(1.0, 0.5, 10);
    const auto tau = ReturnTime::lorenz_log(map, 1.0);
    const auto tb = tau.tail_bounds();
    REQUIRE(tb);
    for (int i = 10; i < 20; ++i) {
        CHECK(tb->sup_a + tb->sup_b * i == doctest::Approx(i + 1.0));
        CHECK(tb->inf_a + tb->inf_b * i == doctest::Approx(static_cast<double>(i)));
    }
    for (int i = 0; i < 10; ++i)
        CHECK(tau.sup_on_branch(i) == doctest::Approx(i + 1.0));
}
