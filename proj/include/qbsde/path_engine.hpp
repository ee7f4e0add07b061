#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "qbsde/problem_spec.hpp"
#include "qbsde/tensor.hpp"

namespace qbsde {

/// Uniform grid 0 = t_0 < ... < t_N = T.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t num_steps);

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t num_steps() const noexcept { return num_steps_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double time(std::size_t n) const noexcept;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_;
    std::size_t num_steps_;
    double dt_;
};

/// Increments dW with shape [batch, N, d]; each entry ~ Normal(0, dt).
struct BrownianIncrements {
    Tensor3 values;

    [[nodiscard]] std::size_t batch() const noexcept { return values.dim0(); }
    [[nodiscard]] std::size_t num_steps() const noexcept { return values.dim1(); }
    [[nodiscard]] std::size_t dim() const noexcept { return values.dim2(); }
};

/// Forward states [batch, N + 1, d] with the increments that produced them.
struct PathBatch {
    Tensor3 states;
    BrownianIncrements increments;
    TimeGrid grid;

    [[nodiscard]] std::size_t batch() const noexcept { return states.dim0(); }
    [[nodiscard]] std::size_t dim() const noexcept { return states.dim2(); }
};

/// Raised when a simulated quantity leaves the finite doubles.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Entry (b, n, j) equals sqrt(dt) * counter_normal(seed, brownian,
/// first_sample + b, n, j): the draw depends only on the global sample index,
/// so any partition of a path set into batches reproduces the same paths.
[[nodiscard]] BrownianIncrements sample_increments(std::uint64_t seed, std::size_t batch,
                                                   const TimeGrid& grid, std::size_t dim,
                                                   std::size_t first_sample = 0);

/// Euler-Maruyama forward recursion from spec.initial.
[[nodiscard]] PathBatch simulate_forward(const ProblemSpec& spec, BrownianIncrements incs,
                                         const TimeGrid& grid);

}  // namespace qbsde
