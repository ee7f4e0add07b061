#include "qbsde/path_engine.hpp"

#include <cmath>
#include <utility>

#include "qbsde/rng.hpp"

namespace qbsde {

TimeGrid::TimeGrid(double horizon, std::size_t num_steps)
    : horizon_(horizon), num_steps_(num_steps), dt_(0.0) {
    if (num_steps == 0) throw std::invalid_argument("TimeGrid: num_steps must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    }
    dt_ = horizon / static_cast<double>(num_steps);
}

double TimeGrid::time(std::size_t n) const noexcept {
    return n >= num_steps_ ? horizon_ : static_cast<double>(n) * dt_;
}

BrownianIncrements sample_increments(std::uint64_t seed, std::size_t batch, const TimeGrid& grid,
                                     std::size_t dim, std::size_t first_sample) {
    if (batch == 0) throw std::invalid_argument("sample_increments: batch must be >= 1");
    if (dim == 0) throw std::invalid_argument("sample_increments: dim must be >= 1");

    const std::size_t steps = grid.num_steps();
    const double sqrt_dt = std::sqrt(grid.dt());
    BrownianIncrements incs{Tensor3(batch, steps, dim)};
    for (std::size_t b = 0; b < batch; ++b) {
        const std::uint64_t sample = first_sample + b;
        for (std::size_t n = 0; n < steps; ++n) {
            auto out = incs.values.row(b, n);
            for (std::size_t j = 0; j < dim; ++j) {
                out[j] = sqrt_dt * counter_normal(seed, Stream::brownian, sample, n, j);
            }
        }
    }
    return incs;
}

PathBatch simulate_forward(const ProblemSpec& spec, BrownianIncrements incs,
                           const TimeGrid& grid) {
    const std::size_t d = spec.dim;
    if (incs.dim() != d) {
        throw std::invalid_argument("simulate_forward: increment dimension " +
                                    std::to_string(incs.dim()) + " != problem dimension " +
                                    std::to_string(d));
    }
    if (incs.num_steps() != grid.num_steps()) {
        throw std::invalid_argument("simulate_forward: increments do not match the time grid");
    }
    if (spec.initial.size() != d) {
        throw std::invalid_argument("simulate_forward: initial condition has wrong dimension");
    }

    const std::size_t batch = incs.batch();
    const std::size_t steps = grid.num_steps();
    const double dt = grid.dt();
    Tensor3 states(batch, steps + 1, d);
    std::vector<double> drift(d), diff(d);

    for (std::size_t b = 0; b < batch; ++b) {
        auto x0 = states.row(b, 0);
        std::copy(spec.initial.begin(), spec.initial.end(), x0.begin());
        for (std::size_t n = 0; n < steps; ++n) {
            const auto x = states.row(b, n);
            auto next = states.row(b, n + 1);
            const auto dw = incs.values.row(b, n);
            spec.drift(x, drift);
            spec.diffusion(x, diff);
            if (spec.log_space) {
                for (std::size_t j = 0; j < d; ++j) {
                    const double rel_drift = drift[j] / x[j];
                    const double rel_vol = diff[j] / x[j];
                    next[j] = x[j] * std::exp((rel_drift - 0.5 * rel_vol * rel_vol) * dt +
                                              rel_vol * dw[j]);
                }
            } else {
                for (std::size_t j = 0; j < d; ++j) {
                    next[j] = x[j] + drift[j] * dt + diff[j] * dw[j];
                }
            }
            for (std::size_t j = 0; j < d; ++j) {
                if (!std::isfinite(next[j])) {
                    throw NonFiniteError("simulate_forward: non-finite state at step " +
                                             std::to_string(n + 1) + " (sample " +
                                             std::to_string(b) + ", coordinate " +
                                             std::to_string(j) + ")",
                                         n + 1);
                }
            }
        }
    }
    return PathBatch{std::move(states), std::move(incs), grid};
}

}  // namespace qbsde
