#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qbsde/problem_spec.hpp"

namespace qbsde {

enum class OptionType { call, put };

[[nodiscard]] std::string_view to_string(OptionType type) noexcept;
[[nodiscard]] OptionType parse_option_type(std::string_view text);

/// A portfolio of `num_options` European options, one per independent asset,
/// all sharing the same strike, type and dynamics.
struct BlackScholesParams {
    double rate = 0.1;
    double vol = 0.2;
    double strike = 100.0;
    double spot = 100.0;
    OptionType type = OptionType::call;
    std::size_t num_options = 100;

    void validate() const;
};

struct HjbParams {
    double lambda = 1.0;
    std::size_t dim = 100;

    void validate() const;
};

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Geometric Brownian motion per asset, driver f = -r y, and terminal payoff
/// summed over the portfolio. Simulated in log space.
[[nodiscard]] ProblemSpec make_black_scholes(const BlackScholesParams& params, double horizon);

/// dX = sqrt(2) dW from the origin, driver f = -(lambda / 2) |z|^2, terminal
/// g(x) = log((1 + |x|^2) / 2).
[[nodiscard]] ProblemSpec make_hjb(const HjbParams& params, double horizon);

/// Degenerate problem with g == value, f == 0 and dX = dW; its exact solution
/// is the constant itself.
[[nodiscard]] ProblemSpec make_constant(std::size_t dim, double value, double horizon);

/// Standard normal CDF.
[[nodiscard]] double normal_cdf(double x) noexcept;

/// Single-option Black-Scholes value.
[[nodiscard]] double bs_option_value(double spot, double strike, double rate, double vol,
                                     double horizon, OptionType type);

/// num_options times the single-option closed form. Throws for horizon <= 0.
[[nodiscard]] double bs_closed_form(const BlackScholesParams& params, double horizon);

/// Terminal condition of the HJB benchmark.
[[nodiscard]] double hjb_terminal(std::span<const double> x) noexcept;

/// Monte Carlo estimate of u(t, x) = -(1/lambda) ln E[exp(-lambda g(x + sqrt(2) W_{T-t}))].
///
/// Sample i uses counter_normal(seed, oracle, i, 0, j) for coordinate j, so
/// calls that share a seed share their draws (common random numbers). The
/// expectation is reduced in log-sum-exp form and the standard error comes
/// from the delta method.
[[nodiscard]] MonteCarloEstimate hjb_exact(const HjbParams& params, double horizon,
                                           std::span<const double> x, double t,
                                           std::size_t mc_samples, std::uint64_t seed);

/// Same estimator evaluated for several lambdas on one shared set of draws.
[[nodiscard]] std::vector<MonteCarloEstimate> hjb_exact(std::span<const double> lambdas,
                                                        double horizon, std::span<const double> x,
                                                        double t, std::size_t mc_samples,
                                                        std::uint64_t seed);

}  // namespace qbsde
