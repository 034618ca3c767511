#include "doctest.h"

#include <cmath>

#include "semiflow/error.hpp"
#include "semiflow/hypothesis.hpp"

using namespace semiflow;

namespace {

// A = (0, 1/2) -> x + 1/2 is neutral, B = (1/2, 1) -> 2x - 1 expands; f^2 contracts by 1/2.
PiecewiseMap neutral_then_doubling()
{
    return PiecewiseMap({0.0, 1.0}, {affine_branch({0.0, 0.5}, 1.0, 0.5), affine_branch({0.5, 1.0}, 2.0, -1.0)});
}

} // namespace

TEST_CASE("doubling with unit roof passes with hand-computed values")
{
    const auto map = make_doubling_map();
    const auto tau = ReturnTime::constant(map, 1.0);
    const auto r = check_conditions(map, tau, 0.5, 0.2);
    const double expanding = std::sqrt(0.5) * std::exp(0.2);
    CHECK(r.expanding_sup == doctest::Approx(expanding).epsilon(1e-12));
    CHECK(r.expanding_sup == doctest::Approx(0.8636).epsilon(1e-4));
    CHECK(r.sum_value == doctest::Approx(std::exp(0.2)).epsilon(1e-12));
    CHECK(r.sum_value == doctest::Approx(1.221).epsilon(1e-3));
    CHECK(r.verdicts.all());
    CHECK_FALSE(r.first_failing_branch);
    CHECK_FALSE(r.iterate_suggestion);
    CHECK(r.tails_integral == doctest::Approx(std::exp(0.2)));
    // e^{-z}/2 is constant on each branch
    for (double h : r.holder_constants)
        CHECK(h == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sigma must be positive")
{
    const auto map = make_doubling_map();
    const auto tau = ReturnTime::constant(map, 1.0);
    try {
        check_conditions(map, tau, 0.5, 0.0);
        FAIL("expected precondition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::precondition);
    }
    CHECK_THROWS_AS(check_conditions(map, tau, 0.5, -0.1), Error);
}

TEST_CASE("lorenz parameter recipe")
{
    const auto p = lorenz_params(1.0, 0.5, 0.5);
    CHECK(p.alpha == doctest::Approx(1.0 / 3.0));
    CHECK(p.sigma_max == doctest::Approx(1.0 / 6.0));
    CHECK(green_condition(0.15, 1.0, 0.5, p.alpha));
    CHECK(blue_condition(0.15, 1.0, 0.5, p.alpha));
    CHECK_FALSE(green_condition(0.2, 1.0, 0.5, p.alpha));

    // every sigma below sigma_max satisfies the blue condition
    for (double lambda : {0.5, 1.0, 3.0})
        for (double beta : {0.1, 0.3, 0.5, 0.8})
            for (double gamma : {0.05, 0.2, 0.5, 1.0}) {
                const auto q = lorenz_params(lambda, beta, gamma);
                CHECK(q.alpha <= gamma);
                CHECK(q.alpha <= (1 - beta) / (2 - beta) + 1e-15);
                for (int k = 0; k < 10; ++k)
                    CHECK(blue_condition(q.sigma_max * k / 10.0, lambda, beta, q.alpha));
            }
    CHECK_THROWS_AS(lorenz_params(1.0, 1.2, 0.5), Error);
}

TEST_CASE("lorenz semiflow fails expansion at the first branch")
{
    const double beta = 0.5;
    const double sigma = 0.15;
    const auto map = make_lorenz_map(1.0, beta, 40);
    const auto tau = ReturnTime::lorenz_log(map, 1.0);
    const double alpha = lorenz_params(1.0, beta, 0.5).alpha;
    const auto r = check_conditions(map, tau, alpha, sigma);
    REQUIRE(r.first_failing_branch);
    CHECK(*r.first_failing_branch == 0);
    CHECK_FALSE(r.verdicts.expanding);
    for (int i = 0; i < 40; ++i) {
        // (sup 1/f')^alpha e^{sigma sup tau} with sup 1/f' = e^{-i/2}/beta and sup tau = i + 1
        const double oracle = std::pow(std::exp(-i * (1 - beta)) / beta, alpha) * std::exp(sigma * (i + 1));
        CHECK(r.expanding_values[static_cast<std::size_t>(i)] == doctest::Approx(oracle).epsilon(1e-12));
    }
    CHECK(r.verdicts.summable);
    CHECK(r.verdicts.holder);
    CHECK(r.verdicts.exp_tails);
    // branch 0 maps into itself and 1/|(f^n)'| -> beta^-n near x = 1: no iterate contracts
    CHECK(iterate_contraction(map, 8) > 1.0);
    CHECK_FALSE(r.iterate_suggestion);
    CHECK_FALSE(r.notes.empty());
}

TEST_CASE("holder verdict detects growth of the constants into the tail")
{
    // Re(z/lambda + 1 - beta) drops below alpha: x^{0.35} is not 0.45-Hoelder uniformly in i
    const auto map = make_lorenz_map(1.0, 0.5, 30);
    const auto tau = ReturnTime::lorenz_log(map, 1.0);
    const auto good = check_conditions(map, tau, 1.0 / 3.0, 0.15, 3);
    CHECK(good.verdicts.holder);
    const auto bad = check_conditions(map, tau, 0.45, 0.15, 3);
    CHECK_FALSE(bad.verdicts.holder);
}

TEST_CASE("iterate suggestion on a map with a neutral branch")
{
    const auto map = neutral_then_doubling();
    CHECK(map.max_contraction() == doctest::Approx(1.0));
    CHECK(iterate_contraction(map, 1) == doctest::Approx(1.0));
    CHECK(iterate_contraction(map, 2) == doctest::Approx(0.5));

    const auto f2 = iterate_map(map, 2);
    CHECK(f2.size() == 3);
    CHECK(f2.max_contraction() == doctest::Approx(0.5).epsilon(1e-9));
    for (double x : {0.1, 0.3, 0.6, 0.7, 0.9}) {
        const double once = evaluate_map(map, x).y;
        CHECK(evaluate_map(f2, x).y == doctest::Approx(evaluate_map(map, once).y));
    }

    const auto tau = ReturnTime::constant(map, 1.0);
    const auto t2 = iterate_return_time(map, tau, 2, f2);
    CHECK(t2(0.3) == doctest::Approx(2.0));

    const auto r = check_conditions(map, tau, 0.5, 0.1);
    CHECK_FALSE(r.verdicts.expanding);
    REQUIRE(r.iterate_suggestion);
    CHECK(*r.iterate_suggestion == 2);
    REQUIRE(r.iterate_alpha);
    CHECK(*r.iterate_alpha == doctest::Approx(0.5));
}

TEST_CASE("iterate budget")
{
    CHECK_THROWS_AS(iterate_map(make_doubling_map(4), 6, 100), Error);
    CHECK(iterate_map(make_doubling_map(), 5).size() == 32);
}

TEST_CASE("exponential tails of the roof")
{
    const auto doubling = make_doubling_map();
    CHECK(exp_tails(doubling, ReturnTime::constant(doubling, 1.0), 2.0) == doctest::Approx(std::exp(2.0)));

    const auto map = make_lorenz_map(1.0, 0.5, 40);
    const auto tau = ReturnTime::lorenz_log(map, 1.0);
    // int_0^1 x^{-s} dx = 1 / (1 - s)
    for (double s : {0.1, 0.5, 0.9})
        CHECK(std::abs(exp_tails(map, tau, s) - 1.0 / (1.0 - s)) <= 1e-6);
    try {
        exp_tails(map, tau, 1.0);
        FAIL("expected divergent tails");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::divergent_tails);
    }
    // unbounded roof on a finite partition
    const auto log_on_doubling = ReturnTime::lorenz_log(doubling, 2.0);
    CHECK(exp_tails(doubling, log_on_doubling, 1.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(exp_tails(doubling, log_on_doubling, 2.0), Error);
}

TEST_CASE("report serialises")
{
    const auto map = make_lorenz_map(1.0, 0.5, 20);
    const auto r = check_conditions(map, ReturnTime::lorenz_log(map, 1.0), 1.0 / 3.0, 0.15, 3);
    const auto j = to_json(r);
    CHECK(j["first_failing_branch"] == 0);
    CHECK(j["verdicts"]["expanding"] == false);
    CHECK(j["expanding_values"].size() == 20);
    CHECK(j["z_samples"].size() == 3);
    const auto text = format_report(r);
    CHECK(text.find("first failing branch 0") != std::string::npos);
}
