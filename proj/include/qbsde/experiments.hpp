#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qbsde/approximator.hpp"
#include "qbsde/problems.hpp"
#include "qbsde/solver.hpp"

namespace qbsde {

enum class ProblemFamily { black_scholes, hjb, constant };
enum class Architecture { mlp, vqc, zero };

[[nodiscard]] std::string_view to_string(ProblemFamily family) noexcept;
[[nodiscard]] std::string_view to_string(Architecture arch) noexcept;
[[nodiscard]] ProblemFamily parse_problem_family(std::string_view text);
[[nodiscard]] Architecture parse_architecture(std::string_view text);

/// One benchmark instance. Only the parameter block matching `family` is used.
struct ProblemConfig {
    ProblemFamily family = ProblemFamily::black_scholes;
    double horizon = 1.0;
    BlackScholesParams black_scholes;
    HjbParams hjb;
    std::size_t constant_dim = 1;
    double constant_value = 1.0;

    void validate() const;
    [[nodiscard]] std::size_t dim() const;
};

struct ArchitectureSpec {
    Architecture kind = Architecture::mlp;
    std::vector<std::size_t> mlp_hidden{64, 64, 64, 64};
    std::size_t n_qubits = 4;
    std::size_t n_layers = 2;
    /// Seed of the fixed VQC encoder/decoder pair, shared by every run.
    std::uint64_t adapter_seed = 0;

    void validate() const;
};

struct OracleSettings {
    std::size_t mc_samples = 1000000;
    std::uint64_t seed = 42;
};

[[nodiscard]] ProblemSpec build_problem(const ProblemConfig& config);

/// Fresh approximator for `dim` state coordinates. `seed` drives the
/// trainable initialization (MLP weights or VQC angles).
[[nodiscard]] std::unique_ptr<Approximator> build_approximator(const ArchitectureSpec& arch,
                                                               std::size_t dim,
                                                               std::uint64_t seed);

/// Reference value of u(0, xi): closed form for Black-Scholes (zero standard
/// error), Monte Carlo at the origin for HJB, the constant itself otherwise.
[[nodiscard]] MonteCarloEstimate problem_oracle(const ProblemConfig& config,
                                                const OracleSettings& settings);

/// A swept coordinate. For Black-Scholes `value` is the strike and `label`
/// the option type; for HJB `value` is lambda and `label` is "lambda"; for the
/// constant problem `value` is the terminal constant and `label` "constant".
struct SweepPoint {
    double value = 0.0;
    std::string label;

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

[[nodiscard]] std::vector<double> default_strike_grid();
[[nodiscard]] std::vector<double> default_lambda_grid();

/// Strike x option-type grid, strikes varying fastest within each type.
[[nodiscard]] std::vector<SweepPoint> black_scholes_points(const std::vector<double>& strikes,
                                                           const std::vector<OptionType>& types);
[[nodiscard]] std::vector<SweepPoint> hjb_points(const std::vector<double>& lambdas);
[[nodiscard]] std::vector<SweepPoint> constant_points(const std::vector<double>& values);

/// `base` with the swept coordinate of `point` applied.
[[nodiscard]] ProblemConfig at_point(const ProblemConfig& base, const SweepPoint& point);

struct SweepSpec {
    ProblemConfig problem;
    std::vector<SweepPoint> points;
    std::vector<ArchitectureSpec> architectures;
    SolverConfig solver;
    std::size_t repetitions = 5;
    std::uint64_t base_seed = 0;
    OracleSettings oracle;

    void validate() const;
};

/// Seed of repetition `rep` at `point`: hash(base_seed, value, label, rep).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base_seed, const SweepPoint& point,
                                        std::size_t rep);

enum class RunStatus { ok, failed };
[[nodiscard]] std::string_view to_string(RunStatus status) noexcept;

struct RunRecord {
    std::size_t point_index = 0;
    std::size_t arch_index = 0;
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::ok;
    double y0 = 0.0;
    double oracle = 0.0;
    double oracle_std_error = 0.0;
    double rel_err = 0.0;
    double abs_err = 0.0;
    std::vector<double> losses;
    std::string message;
};

struct ExperimentReport {
    std::vector<SweepPoint> points;
    std::vector<std::string> architectures;
    /// Ordered by (point, architecture, repetition) regardless of the order
    /// in which the jobs finished.
    std::vector<RunRecord> records;

    [[nodiscard]] std::size_t num_failed() const noexcept;
};

/// Called once per finished job, serialized by the sweep.
using SweepProgress = std::function<void(const ExperimentReport&, const RunRecord&)>;

/// Trains every (point, architecture, repetition) combination on up to
/// `workers` threads. Diverged runs are recorded with status failed.
[[nodiscard]] ExperimentReport run_sweep(const SweepSpec& spec, std::size_t workers = 1,
                                         const SweepProgress& progress = {});

struct SummaryRow {
    SweepPoint point;
    std::string arch;
    std::optional<double> mean_rel_err_pct;
    /// Sample standard deviation; needs at least two successful seeds.
    std::optional<double> std_rel_err_pct;
    std::size_t n_seeds = 0;
    std::size_t n_failed = 0;
};

/// One row per (point, architecture) over the successful runs.
[[nodiscard]] std::vector<SummaryRow> summarize(const ExperimentReport& report);

/// Mean loss per iteration over the successful runs of one (point, arch).
[[nodiscard]] std::vector<double> mean_loss_curve(const ExperimentReport& report,
                                                  std::size_t point_index,
                                                  std::size_t arch_index);

/// Column names of the emitted CSV files, in order.
[[nodiscard]] const std::vector<std::string>& runs_csv_columns();
[[nodiscard]] const std::vector<std::string>& summary_csv_columns();
[[nodiscard]] const std::vector<std::string>& loss_csv_columns();

void write_runs_csv(std::ostream& out, const ExperimentReport& report);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_loss_csv(std::ostream& out, const ExperimentReport& report);

/// Joins `fields` with commas and terminates the line.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace qbsde
