#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qbsde/approximator.hpp"
#include "qbsde/quantum.hpp"

namespace qbsde {

/// Variational circuit wrapped by fixed linear adapters:
///
///   z = D * measure(ansatz(encode(|0...0>, E * [x; t]), theta))
///
/// E (n_qubits x (d + 1)) and D (d x n_qubits) are drawn once from the
/// adapter seed and never change; the angles theta (n_layers x n_qubits,
/// row-major) are the only trainable parameters. Observables are Z on every
/// wire. Gradients use the parameter-shift rule.
class VqcModel final : public Approximator {
public:
    /// E ~ Normal(0, 1 / (d + 1)) and D ~ Normal(0, 1 / (n_qubits * d^2))
    /// from `adapter_seed`; theta ~ Uniform(-pi, pi) from `theta_seed`.
    VqcModel(std::size_t state_dim, std::size_t n_qubits, std::size_t n_layers,
             std::uint64_t adapter_seed, std::uint64_t theta_seed);

    /// Explicit adapters and angles.
    VqcModel(std::size_t n_layers, Eigen::MatrixXd encoder, Eigen::MatrixXd decoder,
             std::vector<double> thetas, std::uint64_t adapter_seed = 0);

    [[nodiscard]] std::string_view kind() const noexcept override { return "vqc"; }
    [[nodiscard]] std::size_t state_dim() const noexcept override {
        return static_cast<std::size_t>(decoder_.rows());
    }
    [[nodiscard]] std::size_t num_parameters() const noexcept override { return thetas_.size(); }
    [[nodiscard]] std::span<const double> parameters() const noexcept override { return thetas_; }
    void set_parameters(std::span<const double> values) override;

    [[nodiscard]] Eigen::MatrixXd forward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const override;
    [[nodiscard]] Eigen::VectorXd backward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states,
        const Eigen::Ref<const Eigen::MatrixXd>& upstream) const override;

    [[nodiscard]] std::unique_ptr<Approximator> clone() const override;
    [[nodiscard]] Checkpoint to_checkpoint() const override;
    [[nodiscard]] static VqcModel from_checkpoint(const Checkpoint& ckpt);

    [[nodiscard]] std::size_t num_qubits() const noexcept {
        return static_cast<std::size_t>(encoder_.rows());
    }
    [[nodiscard]] std::size_t num_layers() const noexcept { return layers_; }
    [[nodiscard]] const Eigen::MatrixXd& encoder() const noexcept { return encoder_; }
    [[nodiscard]] const Eigen::MatrixXd& decoder() const noexcept { return decoder_; }
    [[nodiscard]] std::uint64_t adapter_seed() const noexcept { return adapter_seed_; }

    /// Encoder output E * [x; t] for one sample.
    [[nodiscard]] Eigen::VectorXd features(double time_feature,
                                           std::span<const double> state) const;

    /// Circuit expectations <Z_q> for encoded features and the given angles.
    [[nodiscard]] std::vector<double> expectations(std::span<const double> features,
                                                   std::span<const double> thetas) const;

    /// Parameter-shift Jacobian d<Z_j>/d theta_i, shape [n_qubits x n_params].
    [[nodiscard]] Eigen::MatrixXd expectation_jacobian(std::span<const double> features) const;

private:
    void validate() const;

    std::size_t layers_;
    Eigen::MatrixXd encoder_;
    Eigen::MatrixXd decoder_;
    std::vector<double> thetas_;
    std::uint64_t adapter_seed_;
    std::vector<quantum::Observable> observables_;
};

}  // namespace qbsde
