#include "qbsde/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "qbsde/adam.hpp"
#include "qbsde/rng.hpp"

namespace qbsde {

void SolverConfig::validate() const {
    if (num_paths == 0 || batch_size == 0 || epochs == 0 || num_steps == 0) {
        throw std::invalid_argument("SolverConfig: counts must be positive");
    }
    if (num_paths % batch_size != 0) {
        throw std::invalid_argument("SolverConfig: num_paths must be divisible by batch_size");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("SolverConfig: learning_rate must be positive");
    }
    if (!(y0_init_halfwidth >= 0.0) || !std::isfinite(y0_init_halfwidth)) {
        throw std::invalid_argument("SolverConfig: y0_init_halfwidth must be >= 0");
    }
}

double relative_error(double predicted, double oracle) {
    return std::abs(predicted - oracle) / std::abs(oracle);
}

Eigen::MatrixXd approximator_features(const ProblemSpec& spec, const PathBatch& paths,
                                      std::size_t step) {
    const std::size_t d = paths.dim();
    const std::size_t batch = paths.batch();
    Eigen::MatrixXd feats(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
        const auto x = paths.states.row(b, step);
        for (std::size_t j = 0; j < d; ++j) {
            feats(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) =
                spec.log_space ? std::log(x[j] / spec.initial[j]) : x[j];
        }
    }
    return feats;
}

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index col) {
    return {m.data() + col * m.rows(), static_cast<std::size_t>(m.rows())};
}

void check_compatible(const ProblemSpec& spec, const PathBatch& paths, const Approximator& approx) {
    if (approx.state_dim() != spec.dim || paths.dim() != spec.dim) {
        throw std::invalid_argument("solver: approximator dimension " +
                                    std::to_string(approx.state_dim()) + ", path dimension " +
                                    std::to_string(paths.dim()) + " and problem dimension " +
                                    std::to_string(spec.dim) + " disagree");
    }
}

/// Values kept from the forward rollout for the reverse sweep.
struct Tape {
    std::vector<Eigen::MatrixXd> features;  // [N] d x B
    std::vector<Eigen::MatrixXd> controls;  // [N] d x B
    std::vector<std::vector<double>> values;  // [N + 1] B
};

Tape forward_rollout(const ProblemSpec& spec, const PathBatch& paths, double y0,
                     const Approximator& approx) {
    check_compatible(spec, paths, approx);
    const std::size_t steps = paths.grid.num_steps();
    const std::size_t batch = paths.batch();
    const double dt = paths.grid.dt();
    const double horizon = paths.grid.horizon();

    Tape tape;
    tape.features.reserve(steps);
    tape.controls.reserve(steps);
    tape.values.reserve(steps + 1);
    tape.values.emplace_back(batch, y0);
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = paths.grid.time(n);
        tape.features.push_back(approximator_features(spec, paths, n));
        tape.controls.push_back(approx.forward_batch(t / horizon, tape.features.back()));
        const auto& z = tape.controls.back();
        const auto& y = tape.values.back();
        std::vector<double> next(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto col = static_cast<Eigen::Index>(b);
            const auto zb = column(z, col);
            const auto x = paths.states.row(b, n);
            const auto dw = paths.increments.values.row(b, n);
            double noise = 0.0;
            for (std::size_t j = 0; j < zb.size(); ++j) noise += zb[j] * dw[j];
            next[b] = y[b] - spec.driver.value(t, x, y[b], zb) * dt + noise;
            if (!std::isfinite(next[b])) {
                throw NonFiniteError("rollout: non-finite Y at step " + std::to_string(n + 1) +
                                         " (sample " + std::to_string(b) + ")",
                                     n + 1);
            }
        }
        tape.values.push_back(std::move(next));
    }
    return tape;
}

}  // namespace

std::vector<double> rollout(const ProblemSpec& spec, const PathBatch& paths,
                            const TrainableHead& head, const Approximator& approx) {
    return forward_rollout(spec, paths, head.y0, approx).values.back();
}

LossAndGradient loss_and_gradient(const ProblemSpec& spec, const PathBatch& paths,
                                  const TrainableHead& head, const Approximator& approx) {
    const Tape tape = forward_rollout(spec, paths, head.y0, approx);
    const std::size_t steps = paths.grid.num_steps();
    const std::size_t batch = paths.batch();
    const std::size_t d = spec.dim;
    const double dt = paths.grid.dt();
    const double horizon = paths.grid.horizon();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    LossAndGradient out;
    std::vector<double> adjoint(batch);
    const auto& terminal = tape.values.back();
    for (std::size_t b = 0; b < batch; ++b) {
        const double residual = terminal[b] - spec.terminal(paths.states.row(b, steps));
        out.loss += residual * residual;
        adjoint[b] = 2.0 * residual * inv_batch;
    }
    out.loss *= inv_batch;

    out.d_params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(approx.num_parameters()));
    Eigen::MatrixXd upstream(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(batch));
    std::vector<double> grad_z(d);
    for (std::size_t n = steps; n-- > 0;) {
        const double t = paths.grid.time(n);
        const auto& z = tape.controls[n];
        const auto& y = tape.values[n];
        for (std::size_t b = 0; b < batch; ++b) {
            const auto col = static_cast<Eigen::Index>(b);
            const auto zb = column(z, col);
            const auto x = paths.states.row(b, n);
            const auto dw = paths.increments.values.row(b, n);
            spec.driver.grad_z(t, x, y[b], zb, grad_z);
            for (std::size_t j = 0; j < d; ++j) {
                upstream(static_cast<Eigen::Index>(j), col) = adjoint[b] * (dw[j] - dt * grad_z[j]);
            }
            adjoint[b] *= 1.0 - dt * spec.driver.d_dy(t, x, y[b], zb);
        }
        if (approx.num_parameters() > 0) {
            out.d_params += approx.backward_batch(t / horizon, tape.features[n], upstream);
        }
    }
    out.d_y0 = std::accumulate(adjoint.begin(), adjoint.end(), 0.0);
    return out;
}

TrainReport train(const ProblemSpec& spec, const SolverConfig& config, Approximator& approx,
                  std::optional<double> oracle_value, TrainableHead* head_out) {
    config.validate();
    spec.validate();
    if (approx.state_dim() != spec.dim) {
        throw std::invalid_argument("train: approximator dimension does not match the problem");
    }
    const auto started = std::chrono::steady_clock::now();
    const TimeGrid grid(spec.horizon, config.num_steps);
    const std::size_t batch = config.batch_size;
    const std::size_t num_batches = config.num_paths / batch;

    auto make_paths = [&](std::size_t batch_index) {
        return simulate_forward(
            spec, sample_increments(config.seed, batch, grid, spec.dim, batch_index * batch), grid);
    };

    TrainableHead head;
    {
        const PathBatch first = make_paths(0);
        double center = 0.0;
        for (std::size_t b = 0; b < batch; ++b) center += spec.terminal(first.states.row(b, grid.num_steps()));
        center /= static_cast<double>(batch);
        const double u = 2.0 * counter_uniform(config.seed, Stream::head_init, 0, 0, 0) - 1.0;
        head.y0 = center * (1.0 + config.y0_init_halfwidth * u);
        head.lr_scale = std::max(std::abs(center), 1.0);
    }

    AdamOptimizer param_opt(approx.num_parameters(), {.learning_rate = config.learning_rate});
    AdamOptimizer head_opt(1, {.learning_rate = config.learning_rate * head.lr_scale});
    std::vector<double> params(approx.parameters().begin(), approx.parameters().end());

    TrainReport report;
    report.seed = config.seed;
    report.losses.reserve(config.epochs * num_batches);
    std::vector<std::size_t> order(num_batches);
    std::size_t iteration = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (config.shuffle) {
            for (std::size_t i = num_batches; i > 1; --i) {
                const double u = counter_uniform(config.seed, Stream::shuffle, epoch, i, 0);
                const auto j = static_cast<std::size_t>(u * static_cast<double>(i));
                std::swap(order[i - 1], order[std::min(j, i - 1)]);
            }
        }
        for (std::size_t batch_index : order) {
            const PathBatch paths = make_paths(batch_index);
            LossAndGradient lg;
            try {
                lg = loss_and_gradient(spec, paths, head, approx);
            } catch (const NonFiniteError& e) {
                throw DivergenceError("training diverged at iteration " + std::to_string(iteration) +
                                          ": " + e.what(),
                                      iteration);
            }
            if (!std::isfinite(lg.loss) || !lg.d_params.allFinite() || !std::isfinite(lg.d_y0)) {
                throw DivergenceError("training diverged at iteration " + std::to_string(iteration) +
                                          " (loss " + std::to_string(lg.loss) + ")",
                                      iteration);
            }
            report.losses.push_back(lg.loss);
            if (!params.empty()) {
                param_opt.step(params, {lg.d_params.data(), params.size()});
                approx.set_parameters(params);
            }
            head_opt.step({&head.y0, 1}, {&lg.d_y0, 1});
            ++iteration;
        }
    }

    report.y0 = head.y0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (oracle_value) {
        report.oracle = oracle_value;
        report.relative_error = relative_error(head.y0, *oracle_value);
    }
    if (head_out) *head_out = head;
    return report;
}

EvaluationResult evaluate(const ProblemSpec& spec, const TrainableHead& head,
                          const Approximator& approx, std::size_t num_steps,
                          std::uint64_t fresh_seed, std::size_t num_paths,
                          std::size_t batch_size) {
    if (num_paths == 0 || batch_size == 0) {
        throw std::invalid_argument("evaluate: num_paths and batch_size must be positive");
    }
    const TimeGrid grid(spec.horizon, num_steps);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t first = 0; first < num_paths; first += batch_size) {
        const std::size_t count = std::min(batch_size, num_paths - first);
        const PathBatch paths = simulate_forward(
            spec, sample_increments(fresh_seed, count, grid, spec.dim, first), grid);
        const auto terminal = rollout(spec, paths, head, approx);
        for (std::size_t b = 0; b < count; ++b) {
            const double r = terminal[b] - spec.terminal(paths.states.row(b, num_steps));
            sum += r * r;
            sum_sq += r * r * r * r;
        }
    }
    const double n = static_cast<double>(num_paths);
    EvaluationResult out;
    out.mean_loss = sum / n;
    out.y0 = head.y0;
    if (num_paths > 1) {
        const double var = std::max(sum_sq / n - out.mean_loss * out.mean_loss, 0.0) * n / (n - 1.0);
        out.std_error = std::sqrt(var / n);
    }
    return out;
}

Checkpoint solver_checkpoint(const TrainableHead& head, const Approximator& approx) {
    Checkpoint ckpt = approx.to_checkpoint();
    ckpt.tensors.push_back({"y0", true, 1, 1, {head.y0}});
    ckpt.meta["y0_lr_scale"] = format_double(head.lr_scale);
    return ckpt;
}

TrainableHead head_from_checkpoint(const Checkpoint& ckpt) {
    const auto& y0 = ckpt.tensor("y0");
    if (y0.values.size() != 1) throw std::runtime_error("checkpoint: y0 must be a scalar");
    TrainableHead head;
    head.y0 = y0.values.front();
    head.lr_scale = std::stod(ckpt.meta_value("y0_lr_scale"));
    return head;
}

}  // namespace qbsde
