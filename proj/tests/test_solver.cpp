#include <doctest.h>

#include <cmath>
#include <vector>

#include "qbsde/mlp.hpp"
#include "qbsde/problems.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/solver.hpp"

using namespace qbsde;

namespace {

// Analytic control of a single Black-Scholes call: Z = sigma x dC/dx.
class DeltaHedge final : public Approximator {
public:
    explicit DeltaHedge(BlackScholesParams p, double horizon) : p_(p), horizon_(horizon) {}

    std::string_view kind() const noexcept override { return "delta"; }
    std::size_t state_dim() const noexcept override { return 1; }
    std::size_t num_parameters() const noexcept override { return 0; }
    std::span<const double> parameters() const noexcept override { return {}; }
    void set_parameters(std::span<const double>) override {}

    Eigen::MatrixXd forward_batch(double time_feature,
                                  const Eigen::Ref<const Eigen::MatrixXd>& states) const override {
        check_batch(time_feature, states);
        const double tau = horizon_ * (1.0 - time_feature);
        Eigen::MatrixXd z(1, states.cols());
        for (Eigen::Index b = 0; b < states.cols(); ++b) {
            const double x = p_.spot * std::exp(states(0, b));
            const double d1 = (std::log(x / p_.strike) + (p_.rate + 0.5 * p_.vol * p_.vol) * tau) /
                              (p_.vol * std::sqrt(tau));
            z(0, b) = p_.vol * x * normal_cdf(d1);
        }
        return z;
    }
    Eigen::VectorXd backward_batch(double, const Eigen::Ref<const Eigen::MatrixXd>&,
                                   const Eigen::Ref<const Eigen::MatrixXd>&) const override {
        return {};
    }
    std::unique_ptr<Approximator> clone() const override {
        return std::make_unique<DeltaHedge>(*this);
    }
    Checkpoint to_checkpoint() const override { return {}; }

private:
    BlackScholesParams p_;
    double horizon_;
};

PathBatch make_paths(const ProblemSpec& spec, std::size_t batch, std::size_t steps,
                     std::uint64_t seed) {
    const TimeGrid grid(spec.horizon, steps);
    return simulate_forward(spec, sample_increments(seed, batch, grid, spec.dim), grid);
}

BlackScholesParams single_call() {
    BlackScholesParams p;
    p.num_options = 1;
    return p;
}

SolverConfig small_config(std::uint64_t seed) {
    SolverConfig cfg;
    cfg.num_paths = 400;
    cfg.batch_size = 100;
    cfg.epochs = 2;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("driverless, controlless rollout is the identity") {
    const auto spec = make_constant(3, 1.0, 1.0);
    const auto paths = make_paths(spec, 50, 10, 1);
    const auto y = rollout(spec, paths, {0.7, 1.0}, ZeroApproximator(3));
    for (double v : y) CHECK(v == 0.7);
}

TEST_CASE("Black-Scholes rollout without control compounds at the rate") {
    const auto spec = make_black_scholes(single_call(), 1.0);
    const auto paths = make_paths(spec, 20, 10, 2);
    const auto y = rollout(spec, paths, {5.0, 1.0}, ZeroApproximator(1));
    for (double v : y) CHECK(v == doctest::Approx(5.0 * std::pow(1.01, 10)).epsilon(1e-14));
}

TEST_CASE("HJB rollout without control keeps y0 for every lambda") {
    for (double lambda : {0.5, 1.0, 60.0}) {
        const auto spec = make_hjb({lambda, 5}, 1.0);
        const auto paths = make_paths(spec, 20, 10, 3);
        for (double v : rollout(spec, paths, {4.2, 1.0}, ZeroApproximator(5))) CHECK(v == 4.2);
    }
}

TEST_CASE("loss gradient in y0 matches finite differences") {
    const auto spec = make_hjb({2.0, 3}, 1.0);
    const auto paths = make_paths(spec, 64, 8, 4);
    const auto mlp = MlpModel::with_hidden(3, {8}, 5);
    const TrainableHead head{1.3, 1.0};
    const auto lg = loss_and_gradient(spec, paths, head, mlp);
    const double h = 1e-6;
    const double plus = loss_and_gradient(spec, paths, {head.y0 + h, 1.0}, mlp).loss;
    const double minus = loss_and_gradient(spec, paths, {head.y0 - h, 1.0}, mlp).loss;
    CHECK(lg.d_y0 == doctest::Approx((plus - minus) / (2.0 * h)).epsilon(1e-6));
    CHECK(lg.loss >= 0.0);
}

TEST_CASE("loss gradient in the parameters matches finite differences") {
    const auto spec = make_hjb({2.0, 2}, 1.0);
    const auto paths = make_paths(spec, 32, 6, 6);
    auto mlp = MlpModel::with_hidden(2, {6, 5}, 7);
    // Nonzero biases keep pre-activations off the ReLU kink at the origin.
    std::vector<double> p(mlp.num_parameters());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = counter_normal(8, Stream::test, i, 0, 0);
    mlp.set_parameters(p);
    const TrainableHead head{0.4, 1.0};
    const auto lg = loss_and_gradient(spec, paths, head, mlp);
    Eigen::VectorXd fd(static_cast<Eigen::Index>(p.size()));
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        mlp.set_parameters(p);
        const double plus = loss_and_gradient(spec, paths, head, mlp).loss;
        p[i] = keep - h;
        mlp.set_parameters(p);
        const double minus = loss_and_gradient(spec, paths, head, mlp).loss;
        p[i] = keep;
        fd(static_cast<Eigen::Index>(i)) = (plus - minus) / (2.0 * h);
    }
    mlp.set_parameters(p);
    CHECK((lg.d_params - fd).norm() / fd.norm() <= 1e-5);
}

TEST_CASE("training a constant terminal value recovers the constant") {
    const auto spec = make_constant(1, 2.5, 1.0);
    ZeroApproximator zero(1);
    SolverConfig cfg;
    cfg.seed = 9;
    const auto report = train(spec, cfg, zero, 2.5);
    CHECK(std::abs(report.y0 - 2.5) <= 1e-3);
    CHECK(report.losses.size() == 1000);
    CHECK(report.losses.back() <= 1e-5);
    for (double l : report.losses) CHECK(l >= 0.0);
    REQUIRE(report.relative_error);
    CHECK(*report.relative_error <= 1e-3);
}

TEST_CASE("training is a pure function of the seed") {
    const auto spec = make_black_scholes(single_call(), 1.0);
    auto run = [&](std::uint64_t seed, bool shuffle) {
        auto mlp = MlpModel::with_hidden(1, {8, 8}, seed);
        auto cfg = small_config(seed);
        cfg.shuffle = shuffle;
        auto report = train(spec, cfg, mlp);
        return std::make_pair(report, std::vector<double>(mlp.parameters().begin(), mlp.parameters().end()));
    };
    const auto [a, pa] = run(1, false);
    const auto [b, pb] = run(1, false);
    CHECK(a.y0 == b.y0);
    CHECK(a.losses == b.losses);
    CHECK(pa == pb);
    CHECK(a.seed == 1);

    const auto [c, pc] = run(2, false);
    CHECK(a.losses != c.losses);

    const auto [s1, ps1] = run(1, true);
    const auto [s2, ps2] = run(1, true);
    CHECK(s1.losses == s2.losses);
    CHECK(s1.losses != a.losses);
}

TEST_CASE("evaluation is read-only and consistent with training") {
    const auto zero_spec = make_constant(2, 0.0, 1.0);
    const auto untrained = evaluate(zero_spec, {0.0, 1.0}, ZeroApproximator(2), 10, 5, 300, 100);
    CHECK(untrained.mean_loss == 0.0);

    const auto spec = make_constant(1, 1.5, 1.0);
    auto mlp = MlpModel::with_hidden(1, {8}, 3);
    SolverConfig cfg;
    cfg.seed = 4;
    TrainableHead head;
    const auto report = train(spec, cfg, mlp, {}, &head);
    CHECK(head.y0 == report.y0);

    const std::vector<double> before(mlp.parameters().begin(), mlp.parameters().end());
    const TrainableHead head_before = head;
    const auto eval = evaluate(spec, head, mlp, cfg.num_steps, 12345, 10000, 1000);
    CHECK(std::equal(before.begin(), before.end(), mlp.parameters().begin()));
    CHECK(head.y0 == head_before.y0);
    CHECK(eval.y0 == head.y0);

    // In-sample loss of the final model on the training paths against the
    // out-of-sample loss on fresh paths.
    const auto in_sample = evaluate(spec, head, mlp, cfg.num_steps, cfg.seed, cfg.num_paths, 1000);
    CHECK(std::abs(eval.mean_loss - in_sample.mean_loss) <=
          3.0 * std::hypot(eval.std_error, in_sample.std_error));
    CHECK(in_sample.mean_loss <= 1.01 * report.losses.front());
}

TEST_CASE("delta hedge residual variance shrinks with the step count") {
    const auto p = single_call();
    const auto spec = make_black_scholes(p, 1.0);
    const DeltaHedge hedge(p, 1.0);
    const TrainableHead head{bs_closed_form(p, 1.0), 1.0};
    auto residual_variance = [&](std::size_t steps) {
        const auto paths = make_paths(spec, 4000, steps, 21);
        const auto y = rollout(spec, paths, head, hedge);
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t b = 0; b < y.size(); ++b) {
            const double r = y[b] - spec.terminal(paths.states.row(b, steps));
            sum += r;
            sum_sq += r * r;
        }
        const double n = static_cast<double>(y.size());
        return sum_sq / n - (sum / n) * (sum / n);
    };
    const double v10 = residual_variance(10);
    const double v50 = residual_variance(50);
    CHECK(v50 < 0.5 * v10);
    // Without a hedge the residual carries the full payoff variance.
    const auto paths = make_paths(spec, 4000, 10, 21);
    const auto y = rollout(spec, paths, head, ZeroApproximator(1));
    double sum_sq = 0.0;
    for (std::size_t b = 0; b < y.size(); ++b) {
        const double r = y[b] - spec.terminal(paths.states.row(b, 10));
        sum_sq += r * r;
    }
    CHECK(v10 < 0.2 * sum_sq / 4000.0);
}

TEST_CASE("divergence aborts with the iteration index") {
    const auto spec = make_constant(1, 1e300, 1.0);
    ZeroApproximator zero(1);
    try {
        (void)train(spec, small_config(1), zero);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.iteration() == 0);
    }
}

TEST_CASE("configuration and shape validation") {
    SolverConfig cfg;
    cfg.num_paths = 1050;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.learning_rate = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.num_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    const auto spec = make_constant(2, 1.0, 1.0);
    ZeroApproximator wrong(3);
    CHECK_THROWS_AS((void)train(spec, small_config(1), wrong), std::invalid_argument);
    const auto paths = make_paths(spec, 4, 5, 1);
    CHECK_THROWS_AS((void)rollout(spec, paths, {}, wrong), std::invalid_argument);
    CHECK(relative_error(99.0, 100.0) == doctest::Approx(0.01));
}
