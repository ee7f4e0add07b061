#include "qbsde/approximator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qbsde/mlp.hpp"
#include "qbsde/vqc.hpp"

namespace qbsde {

void Approximator::check_batch(double time_feature,
                               const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    if (!(time_feature >= 0.0 && time_feature <= 1.0)) {
        throw std::invalid_argument("approximator: time feature " + std::to_string(time_feature) +
                                    " outside [0, 1]");
    }
    if (static_cast<std::size_t>(states.rows()) != state_dim()) {
        throw std::invalid_argument("approximator: state dimension " +
                                    std::to_string(states.rows()) + " != " +
                                    std::to_string(state_dim()));
    }
    if (!states.allFinite()) throw std::invalid_argument("approximator: non-finite state");
}

Eigen::VectorXd Approximator::forward(const ApproximatorInput& input) const {
    const Eigen::Map<const Eigen::VectorXd> x(input.state.data(),
                                              static_cast<Eigen::Index>(input.state.size()));
    return forward_batch(input.time_feature, x);
}

Eigen::VectorXd Approximator::backward(const ApproximatorInput& input,
                                       std::span<const double> upstream) const {
    if (upstream.size() != state_dim()) {
        throw std::invalid_argument("approximator: upstream gradient has wrong dimension");
    }
    const Eigen::Map<const Eigen::VectorXd> x(input.state.data(),
                                              static_cast<Eigen::Index>(input.state.size()));
    const Eigen::Map<const Eigen::VectorXd> up(upstream.data(),
                                               static_cast<Eigen::Index>(upstream.size()));
    return backward_batch(input.time_feature, x, up);
}

void ZeroApproximator::set_parameters(std::span<const double> values) {
    if (!values.empty()) throw std::invalid_argument("ZeroApproximator has no parameters");
}

Eigen::MatrixXd ZeroApproximator::forward_batch(
    double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    check_batch(time_feature, states);
    return Eigen::MatrixXd::Zero(states.rows(), states.cols());
}

Eigen::VectorXd ZeroApproximator::backward_batch(
    double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states,
    const Eigen::Ref<const Eigen::MatrixXd>& upstream) const {
    check_batch(time_feature, states);
    if (upstream.rows() != states.rows() || upstream.cols() != states.cols()) {
        throw std::invalid_argument("ZeroApproximator: upstream shape mismatch");
    }
    return Eigen::VectorXd(0);
}

std::unique_ptr<Approximator> ZeroApproximator::clone() const {
    return std::make_unique<ZeroApproximator>(*this);
}

Checkpoint ZeroApproximator::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.model = "zero";
    ckpt.meta["state_dim"] = std::to_string(dim_);
    return ckpt;
}

std::unique_ptr<Approximator> approximator_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.model == "mlp") return std::make_unique<MlpModel>(MlpModel::from_checkpoint(ckpt));
    if (ckpt.model == "vqc") return std::make_unique<VqcModel>(VqcModel::from_checkpoint(ckpt));
    if (ckpt.model == "zero") {
        return std::make_unique<ZeroApproximator>(std::stoul(ckpt.meta_value("state_dim")));
    }
    throw std::runtime_error("checkpoint: unknown model kind '" + ckpt.model + "'");
}

}  // namespace qbsde
