#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "qbsde/checkpoint.hpp"

namespace qbsde {

/// One evaluation point: normalized time t_n / T and the state features.
struct ApproximatorInput {
    double time_feature = 0.0;
    std::span<const double> state;
};

/// A differentiable map (t / T, x) -> z in R^d used to represent the control
/// process. Only trainable parameters are exposed; fixed tensors (such as the
/// quantum model's adapters) never appear in parameters() or in gradients.
///
/// Batched calls take the states as a d x B matrix, one column per sample,
/// and all samples share the time feature.
class Approximator {
public:
    virtual ~Approximator() = default;

    [[nodiscard]] virtual std::string_view kind() const noexcept = 0;
    [[nodiscard]] virtual std::size_t state_dim() const noexcept = 0;
    [[nodiscard]] virtual std::size_t num_parameters() const noexcept = 0;
    [[nodiscard]] virtual std::span<const double> parameters() const noexcept = 0;
    virtual void set_parameters(std::span<const double> values) = 0;

    /// Returns the d x B matrix of outputs.
    [[nodiscard]] virtual Eigen::MatrixXd forward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const = 0;

    /// Gradient of sum_b upstream_b . z_b with respect to the trainable
    /// parameters, accumulated over samples in column order.
    [[nodiscard]] virtual Eigen::VectorXd backward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states,
        const Eigen::Ref<const Eigen::MatrixXd>& upstream) const = 0;

    [[nodiscard]] virtual std::unique_ptr<Approximator> clone() const = 0;
    [[nodiscard]] virtual Checkpoint to_checkpoint() const = 0;

    [[nodiscard]] Eigen::VectorXd forward(const ApproximatorInput& input) const;
    [[nodiscard]] Eigen::VectorXd backward(const ApproximatorInput& input,
                                           std::span<const double> upstream) const;

protected:
    void check_batch(double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const;
};

/// Approximator that always returns zero and has no parameters.
class ZeroApproximator final : public Approximator {
public:
    explicit ZeroApproximator(std::size_t state_dim) : dim_(state_dim) {}

    [[nodiscard]] std::string_view kind() const noexcept override { return "zero"; }
    [[nodiscard]] std::size_t state_dim() const noexcept override { return dim_; }
    [[nodiscard]] std::size_t num_parameters() const noexcept override { return 0; }
    [[nodiscard]] std::span<const double> parameters() const noexcept override { return {}; }
    void set_parameters(std::span<const double> values) override;
    [[nodiscard]] Eigen::MatrixXd forward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states) const override;
    [[nodiscard]] Eigen::VectorXd backward_batch(
        double time_feature, const Eigen::Ref<const Eigen::MatrixXd>& states,
        const Eigen::Ref<const Eigen::MatrixXd>& upstream) const override;
    [[nodiscard]] std::unique_ptr<Approximator> clone() const override;
    [[nodiscard]] Checkpoint to_checkpoint() const override;

private:
    std::size_t dim_;
};

/// Rebuilds any approximator kind from its checkpoint.
[[nodiscard]] std::unique_ptr<Approximator> approximator_from_checkpoint(const Checkpoint& ckpt);

}  // namespace qbsde
