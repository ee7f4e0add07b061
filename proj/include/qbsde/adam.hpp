#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qbsde {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias-corrected moment estimates.
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t num_parameters, AdamConfig config = {});

    /// Updates `params` in place. Throws std::runtime_error naming the first
    /// non-finite gradient entry; params and moments are left untouched then.
    void step(std::span<double> params, std::span<const double> grads);

    [[nodiscard]] std::uint64_t step_count() const noexcept { return steps_; }
    [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<double>& first_moment() const noexcept { return m_; }
    [[nodiscard]] const std::vector<double>& second_moment() const noexcept { return v_; }

private:
    AdamConfig config_;
    std::uint64_t steps_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace qbsde
