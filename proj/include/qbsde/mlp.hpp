#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qbsde/approximator.hpp"

namespace qbsde {

/// Dense feed-forward network with ReLU hidden layers and a linear output.
///
/// Input is [state; time_feature] (width d + 1) and output width is d.
/// Parameters are stored flat, layer by layer, each layer as its row-major
/// weight matrix [out x in] followed by its bias [out].
class MlpModel final : public Approximator {
public:
    /// widths = {d + 1, hidden..., d}. Weights ~ Normal(0, 1 / fan_in) drawn
    /// from `init_seed`; biases start at zero.
    MlpModel(std::vector<std::size_t> widths, std::uint64_t init_seed);

    /// Convenience: widths {state_dim + 1, hidden..., state_dim}.
    static MlpModel with_hidden(std::size_t state_dim, const std::vector<std::size_t>& hidden,
                                std::uint64_t init_seed);

    [[nodiscard]] std::string_view kind() const noexcept override { return "mlp"; }
    [[nodiscard]] std::size_t state_dim() const noexcept override { return widths_.back(); }
    [[nodiscard]] std::size_t num_parameters() const noexcept override { return params_.size(); }
    [[nodiscard]] std::span<const double> parameters() const noexcept override { return params_; }
    void set_parameters(std::span<const double> values) override;

    [[nodiscard]] Eigen::MatrixXd forward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const override;
    [[nodiscard]] Eigen::VectorXd backward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states,
        const Eigen::Ref<const Eigen::MatrixXd>& upstream) const override;

    [[nodiscard]] std::unique_ptr<Approximator> clone() const override;
    [[nodiscard]] Checkpoint to_checkpoint() const override;
    [[nodiscard]] static MlpModel from_checkpoint(const Checkpoint& ckpt);

    [[nodiscard]] const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    [[nodiscard]] std::size_t num_layers() const noexcept { return widths_.size() - 1; }

    /// Offsets of layer l's weights and bias inside parameters().
    [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
    [[nodiscard]] std::size_t bias_offset(std::size_t layer) const {
        return offsets_.at(layer) + widths_.at(layer) * widths_.at(layer + 1);
    }

private:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    [[nodiscard]] Eigen::Map<const RowMatrix> weights(std::size_t layer) const;
    [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
    [[nodiscard]] Eigen::MatrixXd input_matrix(double time_feature,
                                               const Eigen::Ref<const Eigen::MatrixXd>& states) const;

    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

}  // namespace qbsde
