#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbsde/approximator.hpp"
#include "qbsde/path_engine.hpp"
#include "qbsde/problem_spec.hpp"

namespace qbsde {

struct SolverConfig {
    std::size_t num_paths = 10000;
    std::size_t batch_size = 100;
    std::size_t epochs = 10;
    std::size_t num_steps = 10;
    double learning_rate = 0.01;
    /// y0 starts at c * (1 + h * u), u ~ Uniform(-1, 1), where c is the mean
    /// terminal value over the first minibatch and h this half-width.
    double y0_init_halfwidth = 0.1;
    /// Permute the minibatch order every epoch.
    bool shuffle = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The trainable initial value y0 ~ u(0, xi). Its Adam step size is the
/// solver learning rate times `lr_scale`, which training sets to the payoff
/// magnitude so that y0 moves in relative rather than absolute increments.
struct TrainableHead {
    double y0 = 0.0;
    double lr_scale = 1.0;
};

struct TrainReport {
    double y0 = 0.0;
    std::vector<double> losses;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> oracle;
    std::optional<double> relative_error;
};

struct LossAndGradient {
    double loss = 0.0;
    double d_y0 = 0.0;
    Eigen::VectorXd d_params;
};

struct EvaluationResult {
    double mean_loss = 0.0;
    double std_error = 0.0;
    double y0 = 0.0;
};

/// Raised when the training loss stops being finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// What the approximator sees of a state: log(x / xi) for log-space problems,
/// x otherwise. Returns a d x B matrix for step n.
[[nodiscard]] Eigen::MatrixXd approximator_features(const ProblemSpec& spec,
                                                    const PathBatch& paths, std::size_t step);

/// Forward-in-time recursion Y_{n+1} = Y_n - f(t_n, X_n, Y_n, Z_n) dt + Z_n.dW_n
/// from Y_0 = y0 with Z_n = approx(t_n / T, X_n). Returns Y_N per sample.
[[nodiscard]] std::vector<double> rollout(const ProblemSpec& spec, const PathBatch& paths,
                                          const TrainableHead& head, const Approximator& approx);

/// Empirical mean of |Y_N - g(X_N)|^2 over the batch with its exact gradient
/// in y0 and in the approximator's trainable parameters.
[[nodiscard]] LossAndGradient loss_and_gradient(const ProblemSpec& spec, const PathBatch& paths,
                                                const TrainableHead& head,
                                                const Approximator& approx);

/// Minimizes the terminal loss with Adam over epochs x (num_paths /
/// batch_size) minibatches. Sample i of the path set is always generated
/// from (config.seed, i), so every epoch revisits the same paths. `approx`
/// is trained in place; `head`, when given, receives the trained y0.
[[nodiscard]] TrainReport train(const ProblemSpec& spec, const SolverConfig& config,
                                Approximator& approx, std::optional<double> oracle_value = {},
                                TrainableHead* head_out = nullptr);

/// Mean terminal loss on `num_paths` fresh paths drawn from `fresh_seed`.
/// Read-only with respect to the head and the approximator.
[[nodiscard]] EvaluationResult evaluate(const ProblemSpec& spec, const TrainableHead& head,
                                        const Approximator& approx, std::size_t num_steps,
                                        std::uint64_t fresh_seed, std::size_t num_paths,
                                        std::size_t batch_size = 1000);

/// |predicted - oracle| / |oracle|.
[[nodiscard]] double relative_error(double predicted, double oracle);

/// Head and approximator in one checkpoint container.
[[nodiscard]] Checkpoint solver_checkpoint(const TrainableHead& head, const Approximator& approx);
[[nodiscard]] TrainableHead head_from_checkpoint(const Checkpoint& ckpt);

}  // namespace qbsde
