#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qbsde/problems.hpp"
#include "qbsde/rng.hpp"

using namespace qbsde;

namespace {

// Black-Scholes values for S = 100, r = 0.1, sigma = 0.2, T = 1, evaluated in
// 40-digit arithmetic with mpmath.
struct Reference {
    double strike;
    double call;
    double put;
};
const Reference kReference[] = {
    {70, 36.722315111419683316, 0.060934373936853437832},
    {80, 27.99266276564361434, 0.37965620852038019312},
    {90, 19.988577125395468042, 1.4239447486318296266},
    {100, 13.269676584660885246, 3.7534183882568425626},
    {110, 8.1830521286067407302, 7.7151681125622937783},
    {120, 4.7082142723700573687, 13.288704436685206148},
    {130, 2.5460171989143928797, 20.174881543589137391},
    {140, 1.3048694053425606743, 27.982107930376900917},
};

double single(double strike, OptionType type) {
    BlackScholesParams p;
    p.strike = strike;
    p.type = type;
    p.num_options = 1;
    return bs_closed_form(p, 1.0);
}

// Direct certainty-equivalent estimate, written without log-sum-exp.
double naive_hjb(double lambda, std::size_t dim, std::size_t samples, std::uint64_t seed) {
    double sum = 0.0;
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = std::sqrt(2.0) * counter_normal(seed, Stream::oracle, i, 0, j);
        }
        sum += std::exp(-lambda * hjb_terminal(x));
    }
    return -std::log(sum / static_cast<double>(samples)) / lambda;
}

}  // namespace

TEST_CASE("Black-Scholes closed form matches high-precision references") {
    for (const auto& ref : kReference) {
        CAPTURE(ref.strike);
        CHECK(single(ref.strike, OptionType::call) == doctest::Approx(ref.call).epsilon(1e-13));
        CHECK(single(ref.strike, OptionType::put) == doctest::Approx(ref.put).epsilon(1e-12));
    }
}

TEST_CASE("put-call parity holds across the strike grid") {
    for (const auto& ref : kReference) {
        const double lhs = single(ref.strike, OptionType::call) - single(ref.strike, OptionType::put);
        const double rhs = 100.0 - ref.strike * std::exp(-0.1);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("option values are monotone in the strike") {
    for (std::size_t i = 1; i < std::size(kReference); ++i) {
        CHECK(single(kReference[i].strike, OptionType::call) <
              single(kReference[i - 1].strike, OptionType::call));
        CHECK(single(kReference[i].strike, OptionType::put) >
              single(kReference[i - 1].strike, OptionType::put));
    }
}

TEST_CASE("call tends to the spot as the strike vanishes") {
    CHECK(single(1e-8, OptionType::call) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(single(1e-8, OptionType::put) < 1e-12);
}

TEST_CASE("portfolio value scales with the number of options") {
    BlackScholesParams p;
    p.num_options = 100;
    CHECK(bs_closed_form(p, 1.0) == doctest::Approx(100.0 * 13.269676584660885).epsilon(1e-13));
    CHECK_THROWS_AS((void)bs_closed_form(p, 0.0), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    BlackScholesParams p;
    p.vol = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.num_options = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.strike = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_THROWS_AS(HjbParams({0.0, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(HjbParams({1.0, 0}).validate(), std::invalid_argument);
    CHECK(parse_option_type("put") == OptionType::put);
    CHECK_THROWS_AS((void)parse_option_type("straddle"), std::invalid_argument);
}

TEST_CASE("Black-Scholes payoff sums calls or puts over the portfolio") {
    BlackScholesParams p;
    p.num_options = 2;
    const std::vector<double> x{110.0, 90.0};
    CHECK(make_black_scholes(p, 1.0).terminal(x) == 10.0);
    p.type = OptionType::put;
    CHECK(make_black_scholes(p, 1.0).terminal(x) == 10.0);
    const std::vector<double> itm{130.0, 120.0};
    CHECK(make_black_scholes(p, 1.0).terminal(itm) == 0.0);
}

TEST_CASE("Black-Scholes driver is linear in y") {
    BlackScholesParams p;
    p.num_options = 2;
    const auto spec = make_black_scholes(p, 1.0);
    const std::vector<double> x{100.0, 100.0};
    const std::vector<double> z{3.0, -4.0};
    CHECK(spec.driver.value(0.2, x, 5.0, z) == doctest::Approx(-0.5));
    CHECK(spec.driver.d_dy(0.2, x, 5.0, z) == doctest::Approx(-0.1));
    std::vector<double> gz(2, 1.0);
    spec.driver.grad_z(0.2, x, 5.0, z, gz);
    CHECK(gz[0] == 0.0);
    CHECK(gz[1] == 0.0);
    CHECK(spec.log_space);
    CHECK(spec.initial == std::vector<double>{100.0, 100.0});
}

TEST_CASE("HJB driver and terminal condition") {
    const auto spec = make_hjb({3.0, 2}, 1.0);
    const std::vector<double> x{0.0, 0.0};
    const std::vector<double> z{1.0, 1.0};
    // |z|^2 = 2 with lambda = 3.
    CHECK(spec.driver.value(0.0, x, 0.0, z) == doctest::Approx(-3.0));
    CHECK(spec.driver.d_dy(0.0, x, 0.0, z) == 0.0);
    std::vector<double> gz(2);
    spec.driver.grad_z(0.0, x, 0.0, z, gz);
    CHECK(gz[0] == doctest::Approx(-3.0));
    CHECK(gz[1] == doctest::Approx(-3.0));
    const std::vector<double> zero_z{0.0, 0.0};
    CHECK(spec.driver.value(0.0, x, 1.0, zero_z) == 0.0);

    CHECK(hjb_terminal(x) == std::log(0.5));
    const std::vector<double> ones{1.0, 1.0};
    CHECK(hjb_terminal(ones) == doctest::Approx(std::log(1.5)));
    CHECK(spec.initial == x);
    CHECK_FALSE(spec.log_space);
}

TEST_CASE("HJB oracle at the horizon is the terminal condition") {
    const std::vector<double> x{0.5, -1.0, 2.0};
    const auto est = hjb_exact({2.0, 3}, 1.0, x, 1.0, 100, 1);
    CHECK(est.value == hjb_terminal(x));
    CHECK(est.std_error == 0.0);
    CHECK_THROWS_AS((void)hjb_exact({2.0, 3}, 1.0, x, 1.5, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)hjb_exact({2.0, 2}, 1.0, x, 0.0, 100, 1), std::invalid_argument);
}

TEST_CASE("HJB oracle agrees with a direct Monte Carlo evaluation") {
    const std::vector<double> origin(10, 0.0);
    for (double lambda : {0.5, 1.0, 5.0}) {
        const auto est = hjb_exact({lambda, 10}, 1.0, origin, 0.0, 20000, 8);
        CHECK(est.value == doctest::Approx(naive_hjb(lambda, 10, 20000, 8)).epsilon(1e-11));
    }
}

TEST_CASE("HJB oracle is non-increasing in lambda under common random numbers") {
    const std::vector<double> origin(100, 0.0);
    const std::vector<double> lambdas{0.5, 1, 2, 5, 10, 20, 40, 60};
    const auto est = hjb_exact(lambdas, 1.0, origin, 0.0, 50000, 4);
    REQUIRE(est.size() == lambdas.size());
    for (std::size_t i = 1; i < est.size(); ++i) CHECK(est[i].value <= est[i - 1].value);

    // The multi-lambda overload shares draws with the single-lambda call.
    const auto single_est = hjb_exact({10.0, 100}, 1.0, origin, 0.0, 50000, 4);
    CHECK(single_est.value == est[4].value);
    CHECK(single_est.std_error == est[4].std_error);
}

TEST_CASE("HJB oracle lies below the plain expectation (Jensen)") {
    const std::vector<double> origin(20, 0.0);
    const std::size_t n = 20000;
    double mean_g = 0.0;
    std::vector<double> x(20);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
            x[j] = std::sqrt(2.0) * counter_normal(6, Stream::oracle, i, 0, j);
        }
        mean_g += hjb_terminal(x);
    }
    mean_g /= n;
    const auto est = hjb_exact({1.0, 20}, 1.0, origin, 0.0, n, 6);
    CHECK(est.value <= mean_g);
    // Small lambda recovers the expectation.
    const auto tiny = hjb_exact({1e-6, 20}, 1.0, origin, 0.0, n, 6);
    CHECK(tiny.value == doctest::Approx(mean_g).epsilon(1e-5));
}

TEST_CASE("HJB oracle is self-consistent across seeds") {
    const std::vector<double> origin(100, 0.0);
    const auto a = hjb_exact({1.0, 100}, 1.0, origin, 0.0, 100000, 1);
    const auto b = hjb_exact({1.0, 100}, 1.0, origin, 0.0, 100000, 2);
    CHECK(a.std_error > 0.0);
    CHECK(std::abs(a.value - b.value) <= 4.0 * std::hypot(a.std_error, b.std_error));
    CHECK(a.value == doctest::Approx(4.59).epsilon(0.01));
}

TEST_CASE("constant problem has zero driver and constant terminal value") {
    const auto spec = make_constant(3, 2.5, 1.0);
    const std::vector<double> x{1.0, -2.0, 3.0};
    CHECK(spec.terminal(x) == 2.5);
    CHECK(spec.driver.value(0.0, x, 7.0, x) == 0.0);
    CHECK_NOTHROW(spec.validate());
}
