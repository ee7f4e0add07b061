#include "qbsde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qbsde/rng.hpp"

namespace qbsde {

void ProblemSpec::validate() const {
    if (dim == 0) throw std::invalid_argument("ProblemSpec: dim must be >= 1");
    if (initial.size() != dim) {
        throw std::invalid_argument("ProblemSpec: initial condition has dimension " +
                                    std::to_string(initial.size()) + ", expected " +
                                    std::to_string(dim));
    }
    if (!drift || !diffusion || !terminal || !driver.value || !driver.d_dy || !driver.grad_z) {
        throw std::invalid_argument("ProblemSpec '" + label + "': missing callable");
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("ProblemSpec: horizon must be positive");
    for (double v : initial) {
        if (!std::isfinite(v)) throw std::invalid_argument("ProblemSpec: non-finite initial state");
        if (log_space && v <= 0.0) {
            throw std::invalid_argument("ProblemSpec: log-space problems need a positive start");
        }
    }
}

std::string_view to_string(OptionType type) noexcept {
    return type == OptionType::call ? "call" : "put";
}

OptionType parse_option_type(std::string_view text) {
    if (text == "call") return OptionType::call;
    if (text == "put") return OptionType::put;
    throw std::invalid_argument("unknown option type '" + std::string(text) + "'");
}

void BlackScholesParams::validate() const {
    if (!(vol > 0.0)) throw std::invalid_argument("BlackScholesParams: vol must be > 0");
    if (!(spot > 0.0)) throw std::invalid_argument("BlackScholesParams: spot must be > 0");
    if (!(strike > 0.0)) throw std::invalid_argument("BlackScholesParams: strike must be > 0");
    if (!std::isfinite(rate)) throw std::invalid_argument("BlackScholesParams: rate not finite");
    if (num_options == 0) throw std::invalid_argument("BlackScholesParams: num_options must be >= 1");
}

void HjbParams::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("HjbParams: lambda must be positive");
    }
    if (dim == 0) throw std::invalid_argument("HjbParams: dim must be >= 1");
}

namespace {

Driver zero_driver() {
    return Driver{
        [](double, std::span<const double>, double, std::span<const double>) { return 0.0; },
        [](double, std::span<const double>, double, std::span<const double>) { return 0.0; },
        [](double, std::span<const double>, double, std::span<const double>,
           std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
    };
}

}  // namespace

ProblemSpec make_black_scholes(const BlackScholesParams& params, double horizon) {
    params.validate();
    const double r = params.rate;
    const double vol = params.vol;
    const double strike = params.strike;
    const double sign = params.type == OptionType::call ? 1.0 : -1.0;

    ProblemSpec spec;
    spec.dim = params.num_options;
    spec.drift = [r](std::span<const double> x, std::span<double> out) {
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = r * x[j];
    };
    spec.diffusion = [vol](std::span<const double> x, std::span<double> out) {
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = vol * x[j];
    };
    // The pricing equation carries -r u, so f(t, x, y, z) = -r y and the value
    // process grows at the riskless rate: dY = r Y dt + Z.dW.
    spec.driver = Driver{
        [r](double, std::span<const double>, double y, std::span<const double>) { return -r * y; },
        [r](double, std::span<const double>, double, std::span<const double>) { return -r; },
        [](double, std::span<const double>, double, std::span<const double>,
           std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
    };
    spec.terminal = [strike, sign](std::span<const double> x) {
        double total = 0.0;
        for (double xi : x) total += std::max(sign * (xi - strike), 0.0);
        return total;
    };
    spec.initial.assign(params.num_options, params.spot);
    spec.horizon = horizon;
    spec.log_space = true;
    spec.label = "black_scholes_" + std::string(to_string(params.type)) + "_K" +
                 std::to_string(static_cast<long long>(std::llround(strike)));
    spec.validate();
    return spec;
}

ProblemSpec make_hjb(const HjbParams& params, double horizon) {
    params.validate();
    const double lambda = params.lambda;
    const double sqrt2 = std::numbers::sqrt2;

    ProblemSpec spec;
    spec.dim = params.dim;
    spec.drift = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    spec.diffusion = [sqrt2](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), sqrt2);
    };
    // With Z = sigma^T grad u = sqrt(2) grad u, the term -lambda |grad u|^2
    // reads -(lambda / 2) |Z|^2.
    spec.driver = Driver{
        [lambda](double, std::span<const double>, double, std::span<const double> z) {
            double sq = 0.0;
            for (double v : z) sq += v * v;
            return -0.5 * lambda * sq;
        },
        [](double, std::span<const double>, double, std::span<const double>) { return 0.0; },
        [lambda](double, std::span<const double>, double, std::span<const double> z,
                 std::span<double> out) {
            for (std::size_t j = 0; j < z.size(); ++j) out[j] = -lambda * z[j];
        },
    };
    spec.terminal = [](std::span<const double> x) { return hjb_terminal(x); };
    spec.initial.assign(params.dim, 0.0);
    spec.horizon = horizon;
    spec.log_space = false;
    spec.label = "hjb_lambda" + std::to_string(lambda);
    spec.validate();
    return spec;
}

ProblemSpec make_constant(std::size_t dim, double value, double horizon) {
    ProblemSpec spec;
    spec.dim = dim;
    spec.drift = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    spec.diffusion = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 1.0);
    };
    spec.driver = zero_driver();
    spec.terminal = [value](std::span<const double>) { return value; };
    spec.initial.assign(dim, 0.0);
    spec.horizon = horizon;
    spec.label = "constant";
    spec.validate();
    return spec;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bs_option_value(double spot, double strike, double rate, double vol, double horizon,
                       OptionType type) {
    if (!(horizon > 0.0)) throw std::invalid_argument("bs_option_value: horizon must be > 0");
    const double sd = vol * std::sqrt(horizon);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * horizon) / sd;
    const double d2 = d1 - sd;
    const double discounted_strike = strike * std::exp(-rate * horizon);
    if (type == OptionType::call) {
        return spot * normal_cdf(d1) - discounted_strike * normal_cdf(d2);
    }
    return discounted_strike * normal_cdf(-d2) - spot * normal_cdf(-d1);
}

double bs_closed_form(const BlackScholesParams& params, double horizon) {
    params.validate();
    return static_cast<double>(params.num_options) *
           bs_option_value(params.spot, params.strike, params.rate, params.vol, horizon,
                           params.type);
}

double hjb_terminal(std::span<const double> x) noexcept {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    return std::log(0.5 * (1.0 + sq));
}

std::vector<MonteCarloEstimate> hjb_exact(std::span<const double> lambdas, double horizon,
                                          std::span<const double> x, double t,
                                          std::size_t mc_samples, std::uint64_t seed) {
    if (mc_samples == 0) throw std::invalid_argument("hjb_exact: mc_samples must be >= 1");
    if (x.empty()) throw std::invalid_argument("hjb_exact: empty state");
    if (t < 0.0 || t > horizon) {
        throw std::invalid_argument("hjb_exact: t must lie in [0, T]");
    }
    for (double lambda : lambdas) HjbParams{lambda, x.size()}.validate();

    std::vector<MonteCarloEstimate> out(lambdas.size());
    const double remaining = horizon - t;
    if (remaining == 0.0) {
        for (auto& est : out) est = {hjb_terminal(x), 0.0};
        return out;
    }

    const std::size_t d = x.size();
    const double scale = std::sqrt(2.0 * remaining);
    std::vector<double> g(mc_samples);
    std::vector<double> point(d);
    for (std::size_t i = 0; i < mc_samples; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            point[j] = x[j] + scale * counter_normal(seed, Stream::oracle, i, 0, j);
        }
        g[i] = hjb_terminal(point);
    }
    const double g_min = *std::min_element(g.begin(), g.end());
    const double count = static_cast<double>(mc_samples);

    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lambda = lambdas[k];
        // w_i = exp(-lambda (g_i - g_min)) lies in (0, 1], so the sum cannot
        // underflow to zero: the minimizing sample contributes exactly 1.
        double sum = 0.0;
        double sum_sq = 0.0;
        for (double gi : g) {
            const double w = std::exp(-lambda * (gi - g_min));
            sum += w;
            sum_sq += w * w;
        }
        const double mean = sum / count;
        const double value = g_min - std::log(mean) / lambda;
        double std_error = 0.0;
        if (mc_samples > 1) {
            const double var = std::max(sum_sq / count - mean * mean, 0.0) * count / (count - 1.0);
            std_error = std::sqrt(var / count) / (lambda * mean);
        }
        out[k] = {value, std_error};
    }
    return out;
}

MonteCarloEstimate hjb_exact(const HjbParams& params, double horizon, std::span<const double> x,
                             double t, std::size_t mc_samples, std::uint64_t seed) {
    params.validate();
    if (x.size() != params.dim) {
        throw std::invalid_argument("hjb_exact: state dimension does not match params.dim");
    }
    const double lambdas[] = {params.lambda};
    return hjb_exact(lambdas, horizon, x, t, mc_samples, seed).front();
}

}  // namespace qbsde
