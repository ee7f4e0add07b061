#include "qbsde/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qbsde {

AdamOptimizer::AdamOptimizer(std::size_t num_parameters, AdamConfig config)
    : config_(config), m_(num_parameters, 0.0), v_(num_parameters, 0.0) {
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("Adam: learning rate must be > 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw std::invalid_argument("Adam: decay rates must lie in [0, 1)");
    }
    if (!(config.epsilon > 0.0)) throw std::invalid_argument("Adam: epsilon must be > 0");
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("Adam: expected " + std::to_string(m_.size()) +
                                    " parameters and gradients, got " +
                                    std::to_string(params.size()) + " and " +
                                    std::to_string(grads.size()));
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw std::runtime_error("Adam: non-finite gradient at parameter " + std::to_string(i) +
                                     " on step " + std::to_string(steps_ + 1));
        }
    }
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m_[i] / correction1;
        const double v_hat = v_[i] / correction2;
        params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
}

}  // namespace qbsde
