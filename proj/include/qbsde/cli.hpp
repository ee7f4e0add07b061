#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qbsde/experiments.hpp"

namespace qbsde::cli {

inline constexpr std::string_view kSchemaVersion = "qbsde-config/1";

enum ExitCode : int {
    exit_ok = 0,
    exit_divergence = 1,
    exit_config_error = 2,
    exit_partial_sweep = 3,
    exit_runtime_error = 4,
};

/// Raised for anything wrong with the configuration or the command line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleSection {
    std::size_t mc_samples = 1000000;
    std::vector<std::uint64_t> seeds{42};
};

struct SweepSection {
    std::vector<double> values;
    /// Black-Scholes only.
    std::vector<OptionType> option_types;
    std::vector<ArchitectureSpec> architectures;
    std::size_t repetitions = 5;
    std::uint64_t base_seed = 0;
};

struct RunConfig {
    std::string output_dir = "out";
    ProblemConfig problem;
    ArchitectureSpec architecture;
    SolverConfig solver;
    OracleSection oracle;
    std::optional<SweepSection> sweep;
};

/// Strict parse: unknown keys, missing keys, wrong types and a mismatched
/// schema_version all raise ConfigError.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// The configuration written by `init`.
[[nodiscard]] RunConfig template_config();

/// Sweep described by the config's sweep section over its problem and solver.
[[nodiscard]] SweepSpec make_sweep_spec(const RunConfig& config);

[[nodiscard]] const std::vector<std::string>& oracle_csv_columns();
[[nodiscard]] const std::vector<std::string>& train_loss_csv_columns();
[[nodiscard]] const std::vector<std::string>& train_summary_csv_columns();

/// Entry point without the program name: args = {"train", "--config", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qbsde::cli
