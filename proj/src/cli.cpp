#include "qbsde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qbsde/checkpoint.hpp"

namespace qbsde::cli {

namespace {

using nlohmann::json;

/// Walks one JSON object, remembering which keys were consumed so that the
/// leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return obj_.contains(key); }

    const json& at(const std::string& key) {
        const auto it = obj_.find(key);
        if (it == obj_.end()) throw ConfigError("missing required key " + where(key));
        used_.insert(key);
        return *it;
    }

    double number(const std::string& key) { return as_number(at(key), where(key)); }
    std::uint64_t unsigned_int(const std::string& key) { return as_unsigned(at(key), where(key)); }

    std::string text(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key) {
        const json& v = at(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
        return v.get<bool>();
    }

    const json& array(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError(where(key) + " must be an array");
        return v;
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!used_.contains(item.key())) throw ConfigError("unknown key " + where(item.key()));
        }
    }

    [[nodiscard]] std::string where(const std::string& key) const { return path_ + "." + key; }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where + " must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(where + " must be finite");
        return d;
    }

    static std::uint64_t as_unsigned(const json& v, const std::string& where) {
        if (!v.is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

std::size_t as_size(std::uint64_t v) { return static_cast<std::size_t>(v); }

template <typename F>
auto validated(const std::string& section, F&& check) {
    try {
        return check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(section + ": " + e.what());
    }
}

ProblemConfig parse_problem(const json& doc) {
    ObjectReader r(doc, "problem");
    ProblemConfig p;
    p.family = validated("problem.family", [&] { return parse_problem_family(r.text("family")); });
    p.horizon = r.number("horizon");
    switch (p.family) {
        case ProblemFamily::black_scholes:
            p.black_scholes.rate = r.number("rate");
            p.black_scholes.vol = r.number("volatility");
            p.black_scholes.strike = r.number("strike");
            p.black_scholes.spot = r.number("spot");
            p.black_scholes.type = validated("problem.option_type",
                                             [&] { return parse_option_type(r.text("option_type")); });
            p.black_scholes.num_options = as_size(r.unsigned_int("num_options"));
            break;
        case ProblemFamily::hjb:
            p.hjb.lambda = r.number("lambda");
            p.hjb.dim = as_size(r.unsigned_int("dim"));
            break;
        case ProblemFamily::constant:
            p.constant_dim = as_size(r.unsigned_int("dim"));
            p.constant_value = r.number("value");
            break;
    }
    r.finish();
    validated("problem", [&] {
        p.validate();
        return 0;
    });
    return p;
}

json problem_to_json(const ProblemConfig& p) {
    json j;
    j["family"] = std::string(to_string(p.family));
    j["horizon"] = p.horizon;
    switch (p.family) {
        case ProblemFamily::black_scholes:
            j["rate"] = p.black_scholes.rate;
            j["volatility"] = p.black_scholes.vol;
            j["strike"] = p.black_scholes.strike;
            j["spot"] = p.black_scholes.spot;
            j["option_type"] = std::string(to_string(p.black_scholes.type));
            j["num_options"] = p.black_scholes.num_options;
            break;
        case ProblemFamily::hjb:
            j["lambda"] = p.hjb.lambda;
            j["dim"] = p.hjb.dim;
            break;
        case ProblemFamily::constant:
            j["dim"] = p.constant_dim;
            j["value"] = p.constant_value;
            break;
    }
    return j;
}

ArchitectureSpec parse_architecture_spec(const json& doc, const std::string& path) {
    ObjectReader r(doc, path);
    ArchitectureSpec a;
    a.kind = validated(path + ".kind", [&] { return parse_architecture(r.text("kind")); });
    switch (a.kind) {
        case Architecture::mlp: {
            a.mlp_hidden.clear();
            const json& hidden = r.array("hidden");
            for (std::size_t i = 0; i < hidden.size(); ++i) {
                a.mlp_hidden.push_back(as_size(ObjectReader::as_unsigned(
                    hidden[i], r.where("hidden") + "[" + std::to_string(i) + "]")));
            }
            break;
        }
        case Architecture::vqc:
            a.n_qubits = as_size(r.unsigned_int("n_qubits"));
            a.n_layers = as_size(r.unsigned_int("n_layers"));
            a.adapter_seed = r.unsigned_int("adapter_seed");
            break;
        case Architecture::zero: break;
    }
    r.finish();
    validated(path, [&] {
        a.validate();
        return 0;
    });
    return a;
}

json architecture_to_json(const ArchitectureSpec& a) {
    json j;
    j["kind"] = std::string(to_string(a.kind));
    switch (a.kind) {
        case Architecture::mlp: j["hidden"] = a.mlp_hidden; break;
        case Architecture::vqc:
            j["n_qubits"] = a.n_qubits;
            j["n_layers"] = a.n_layers;
            j["adapter_seed"] = a.adapter_seed;
            break;
        case Architecture::zero: break;
    }
    return j;
}

SolverConfig parse_solver(const json& doc) {
    ObjectReader r(doc, "solver");
    SolverConfig s;
    s.num_paths = as_size(r.unsigned_int("num_paths"));
    s.batch_size = as_size(r.unsigned_int("batch_size"));
    s.epochs = as_size(r.unsigned_int("epochs"));
    s.num_steps = as_size(r.unsigned_int("num_steps"));
    s.learning_rate = r.number("learning_rate");
    s.y0_init_halfwidth = r.number("y0_init_halfwidth");
    s.shuffle = r.boolean("shuffle");
    s.seed = r.unsigned_int("seed");
    r.finish();
    validated("solver", [&] {
        s.validate();
        return 0;
    });
    return s;
}

json solver_to_json(const SolverConfig& s) {
    json j;
    j["num_paths"] = s.num_paths;
    j["batch_size"] = s.batch_size;
    j["epochs"] = s.epochs;
    j["num_steps"] = s.num_steps;
    j["learning_rate"] = s.learning_rate;
    j["y0_init_halfwidth"] = s.y0_init_halfwidth;
    j["shuffle"] = s.shuffle;
    j["seed"] = s.seed;
    return j;
}

OracleSection parse_oracle(const json& doc) {
    ObjectReader r(doc, "oracle");
    OracleSection o;
    o.mc_samples = as_size(r.unsigned_int("mc_samples"));
    if (o.mc_samples < 2) throw ConfigError("oracle.mc_samples must be at least 2");
    o.seeds.clear();
    const json& seeds = r.array("seeds");
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        o.seeds.push_back(
            ObjectReader::as_unsigned(seeds[i], r.where("seeds") + "[" + std::to_string(i) + "]"));
    }
    if (o.seeds.empty()) throw ConfigError("oracle.seeds must not be empty");
    r.finish();
    return o;
}

SweepSection parse_sweep(const json& doc, ProblemFamily family) {
    ObjectReader r(doc, "sweep");
    SweepSection s;
    const json& values = r.array("values");
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.values.push_back(
            ObjectReader::as_number(values[i], r.where("values") + "[" + std::to_string(i) + "]"));
    }
    if (s.values.empty()) throw ConfigError("sweep.values must not be empty");
    if (family == ProblemFamily::black_scholes) {
        const json& types = r.array("option_types");
        for (const json& t : types) {
            if (!t.is_string()) throw ConfigError("sweep.option_types entries must be strings");
            s.option_types.push_back(validated(
                "sweep.option_types", [&] { return parse_option_type(t.get<std::string>()); }));
        }
        if (s.option_types.empty()) throw ConfigError("sweep.option_types must not be empty");
    }
    const json& archs = r.array("architectures");
    for (std::size_t i = 0; i < archs.size(); ++i) {
        s.architectures.push_back(
            parse_architecture_spec(archs[i], "sweep.architectures[" + std::to_string(i) + "]"));
    }
    if (s.architectures.empty()) throw ConfigError("sweep.architectures must not be empty");
    s.repetitions = as_size(r.unsigned_int("repetitions"));
    if (s.repetitions == 0) throw ConfigError("sweep.repetitions must be at least 1");
    s.base_seed = r.unsigned_int("base_seed");
    r.finish();
    return s;
}

json sweep_to_json(const SweepSection& s, ProblemFamily family) {
    json j;
    j["values"] = s.values;
    if (family == ProblemFamily::black_scholes) {
        json types = json::array();
        for (OptionType t : s.option_types) types.push_back(std::string(to_string(t)));
        j["option_types"] = types;
    }
    json archs = json::array();
    for (const auto& a : s.architectures) archs.push_back(architecture_to_json(a));
    j["architectures"] = archs;
    j["repetitions"] = s.repetitions;
    j["base_seed"] = s.base_seed;
    return j;
}

std::vector<SweepPoint> sweep_points(const RunConfig& config) {
    std::vector<double> values;
    std::vector<OptionType> types;
    if (config.sweep) {
        values = config.sweep->values;
        types = config.sweep->option_types;
    }
    switch (config.problem.family) {
        case ProblemFamily::black_scholes:
            if (values.empty()) values = {config.problem.black_scholes.strike};
            if (types.empty()) types = {config.problem.black_scholes.type};
            return black_scholes_points(values, types);
        case ProblemFamily::hjb:
            if (values.empty()) values = {config.problem.hjb.lambda};
            return hjb_points(values);
        case ProblemFamily::constant:
            if (values.empty()) values = {config.problem.constant_value};
            return constant_points(values);
    }
    return {};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
    os.close();
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string percent(double rel) {
    std::ostringstream os;
    os.precision(4);
    os << 100.0 * rel << "%";
    return os.str();
}

struct CommandOptions {
    std::string config_path;
    std::string out_dir;
    std::size_t workers = 1;
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
};

RunConfig load_for_command(const CommandOptions& opts) {
    RunConfig config = load_config(opts.config_path);
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (config.output_dir.empty()) throw ConfigError("output_dir must not be empty");
    return config;
}

std::filesystem::path prepare_output(const RunConfig& config) {
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int cmd_init(const CommandOptions& opts, std::ostream& out) {
    const std::filesystem::path path(opts.config_path);
    if (std::filesystem::exists(path)) {
        throw ConfigError("refusing to overwrite existing file " + path.string());
    }
    write_text_file(path, to_json(template_config()).dump(2) + "\n");
    out << "wrote template configuration to " << path.string() << "\n";
    return exit_ok;
}

int cmd_oracle(const CommandOptions& opts, std::ostream& out) {
    RunConfig config = load_for_command(opts);
    if (opts.has_seed_override) config.oracle.seeds = {opts.seed_override};
    const auto points = sweep_points(config);
    for (const auto& p : points) {
        validated("sweep", [&] { return at_point(config.problem, p); });
    }

    std::ostringstream csv;
    write_csv_row(csv, oracle_csv_columns());
    auto emit = [&](const SweepPoint& p, const std::string& seed, const MonteCarloEstimate& e) {
        write_csv_row(csv, {format_double(p.value), p.label, seed, format_double(e.value),
                            format_double(e.std_error)});
        out << p.label << " " << p.value << ": " << format_double(e.value);
        if (e.std_error > 0.0) out << " +- " << format_double(e.std_error) << " (seed " << seed << ")";
        out << "\n" << std::flush;
    };
    if (config.problem.family == ProblemFamily::hjb) {
        std::vector<double> lambdas;
        for (const auto& p : points) lambdas.push_back(p.value);
        const std::vector<double> origin(config.problem.hjb.dim, 0.0);
        for (std::uint64_t seed : config.oracle.seeds) {
            const auto est = hjb_exact(lambdas, config.problem.horizon, origin, 0.0,
                                       config.oracle.mc_samples, seed);
            for (std::size_t i = 0; i < points.size(); ++i) {
                emit(points[i], std::to_string(seed), est[i]);
            }
        }
    } else {
        for (const auto& p : points) {
            emit(p, "", problem_oracle(at_point(config.problem, p), {}));
        }
    }
    const auto dir = prepare_output(config);
    write_text_file(dir / "oracle.csv", csv.str());
    return exit_ok;
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    RunConfig config = load_for_command(opts);
    if (opts.has_seed_override) config.solver.seed = opts.seed_override;
    const ProblemSpec problem = build_problem(config.problem);
    auto approx = build_approximator(config.architecture, problem.dim, config.solver.seed);
    const MonteCarloEstimate oracle =
        problem_oracle(config.problem, {config.oracle.mc_samples, config.oracle.seeds.front()});

    TrainableHead head;
    TrainReport report;
    try {
        report = train(problem, config.solver, *approx, oracle.value, &head);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return exit_divergence;
    }

    const std::size_t per_epoch = config.solver.num_paths / config.solver.batch_size;
    std::ostringstream loss_csv;
    write_csv_row(loss_csv, train_loss_csv_columns());
    for (std::size_t i = 0; i < report.losses.size(); ++i) {
        write_csv_row(loss_csv, {std::to_string(i), std::to_string(i / per_epoch),
                                 format_double(report.losses[i])});
    }
    std::ostringstream summary_csv;
    write_csv_row(summary_csv, train_summary_csv_columns());
    write_csv_row(summary_csv,
                  {std::string(to_string(config.problem.family)),
                   std::string(to_string(config.architecture.kind)), std::to_string(report.seed),
                   format_double(report.y0), format_double(oracle.value),
                   format_double(oracle.std_error), format_double(*report.relative_error),
                   format_double(std::abs(report.y0 - oracle.value)),
                   format_double(report.losses.back()), std::to_string(report.losses.size())});
    std::ostringstream ckpt;
    write_checkpoint(ckpt, solver_checkpoint(head, *approx));

    const auto dir = prepare_output(config);
    write_text_file(dir / "train_loss.csv", loss_csv.str());
    write_text_file(dir / "train_summary.csv", summary_csv.str());
    write_text_file(dir / "checkpoint.txt", ckpt.str());
    out << "y0 " << format_double(report.y0) << " oracle " << format_double(oracle.value)
        << " rel_err " << percent(*report.relative_error) << " final_loss "
        << format_double(report.losses.back()) << " wall " << report.wall_seconds << "s\n";
    return exit_ok;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out) {
    RunConfig config = load_for_command(opts);
    if (!config.sweep) throw ConfigError("the sweep command needs a sweep section");
    if (opts.has_seed_override) config.sweep->base_seed = opts.seed_override;
    if (opts.workers == 0) throw ConfigError("--workers must be at least 1");
    const SweepSpec spec = make_sweep_spec(config);

    const std::size_t total = spec.points.size() * spec.architectures.size() * spec.repetitions;
    std::size_t done = 0;
    auto progress = [&](const ExperimentReport& report, const RunRecord& rec) {
        const auto& p = report.points[rec.point_index];
        std::ostringstream line;
        line << "[" << ++done << "/" << total << "] " << p.label << " " << p.value << " "
             << report.architectures[rec.arch_index] << " seed " << rec.seed << ": ";
        if (rec.status == RunStatus::ok) {
            line << "y0 " << format_double(rec.y0) << " rel_err " << percent(rec.rel_err);
        } else {
            line << "failed (" << rec.message << ")";
        }
        line << "\n";
        out << line.str() << std::flush;
    };
    const ExperimentReport report = run_sweep(spec, opts.workers, progress);

    std::ostringstream runs, summary, losses;
    write_runs_csv(runs, report);
    write_summary_csv(summary, summarize(report));
    write_loss_csv(losses, report);
    const auto dir = prepare_output(config);
    write_text_file(dir / "sweep_runs.csv", runs.str());
    write_text_file(dir / "sweep_summary.csv", summary.str());
    write_text_file(dir / "sweep_loss.csv", losses.str());

    const std::size_t failed = report.num_failed();
    out << report.records.size() - failed << " of " << report.records.size()
        << " runs succeeded\n";
    if (failed == 0) return exit_ok;
    return failed == report.records.size() ? exit_divergence : exit_partial_sweep;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    ObjectReader r(doc, "config");
    const std::string version = r.text("schema_version");
    if (version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version '" + version + "', expected '" +
                          std::string(kSchemaVersion) + "'");
    }
    RunConfig config;
    config.output_dir = r.text("output_dir");
    config.problem = parse_problem(r.at("problem"));
    config.architecture = parse_architecture_spec(r.at("architecture"), "architecture");
    config.solver = parse_solver(r.at("solver"));
    config.oracle = parse_oracle(r.at("oracle"));
    if (r.has("sweep")) config.sweep = parse_sweep(r.at("sweep"), config.problem.family);
    r.finish();
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& config) {
    json j;
    j["schema_version"] = std::string(kSchemaVersion);
    j["output_dir"] = config.output_dir;
    j["problem"] = problem_to_json(config.problem);
    j["architecture"] = architecture_to_json(config.architecture);
    j["solver"] = solver_to_json(config.solver);
    j["oracle"] = {{"mc_samples", config.oracle.mc_samples}, {"seeds", config.oracle.seeds}};
    if (config.sweep) j["sweep"] = sweep_to_json(*config.sweep, config.problem.family);
    return j;
}

RunConfig template_config() {
    RunConfig c;
    c.output_dir = "out";
    c.problem.family = ProblemFamily::black_scholes;
    c.problem.black_scholes.num_options = 1;
    c.architecture.kind = Architecture::mlp;
    c.solver.seed = 1;
    SweepSection s;
    s.values = default_strike_grid();
    s.option_types = {OptionType::call, OptionType::put};
    ArchitectureSpec vqc;
    vqc.kind = Architecture::vqc;
    vqc.n_qubits = 4;
    vqc.n_layers = 2;
    vqc.adapter_seed = 7;
    s.architectures = {c.architecture, vqc};
    s.repetitions = 5;
    s.base_seed = 2024;
    c.sweep = s;
    return c;
}

SweepSpec make_sweep_spec(const RunConfig& config) {
    if (!config.sweep) throw ConfigError("config has no sweep section");
    SweepSpec spec;
    spec.problem = config.problem;
    spec.points = sweep_points(config);
    spec.architectures = config.sweep->architectures;
    spec.solver = config.solver;
    spec.repetitions = config.sweep->repetitions;
    spec.base_seed = config.sweep->base_seed;
    spec.oracle = {config.oracle.mc_samples, config.oracle.seeds.front()};
    validated("sweep", [&] {
        spec.validate();
        return 0;
    });
    return spec;
}

const std::vector<std::string>& oracle_csv_columns() {
    static const std::vector<std::string> cols{"sweep_value", "option_type_or_lambda",
                                               "oracle_seed", "value", "std_error"};
    return cols;
}

const std::vector<std::string>& train_loss_csv_columns() {
    static const std::vector<std::string> cols{"iteration", "epoch", "loss"};
    return cols;
}

const std::vector<std::string>& train_summary_csv_columns() {
    static const std::vector<std::string> cols{"family",  "arch",    "seed",
                                               "y0",      "oracle",  "oracle_std_error",
                                               "rel_err", "abs_err", "final_loss",
                                               "iterations"};
    return cols;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deep BSDE solver with classical and variational quantum approximators", "qbsde"};
    app.require_subcommand(1);
    CommandOptions opts;

    auto* init = app.add_subcommand("init", "Write a template configuration file");
    init->add_option("--config", opts.config_path, "Destination of the template")->required();

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON configuration file")->required();
        sub->add_option("--out", opts.out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--seed-override", opts.seed_override, "Replace the configured seed");
    };
    auto* oracle = app.add_subcommand("oracle", "Reference values for the configured problem");
    add_common(oracle);
    auto* train_cmd = app.add_subcommand("train", "Train one model and write its outputs");
    add_common(train_cmd);
    auto* sweep = app.add_subcommand("sweep", "Run a repeated sweep over the configured values");
    add_common(sweep);
    sweep->add_option("--workers", opts.workers, "Parallel training jobs")
        ->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_config_error;
    }
    for (auto* sub : {oracle, train_cmd, sweep}) {
        if (sub->parsed() && sub->count("--seed-override") > 0) opts.has_seed_override = true;
    }

    try {
        if (init->parsed()) return cmd_init(opts, out);
        if (oracle->parsed()) return cmd_oracle(opts, out);
        if (train_cmd->parsed()) return cmd_train(opts, out, err);
        if (sweep->parsed()) return cmd_sweep(opts, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime_error;
    }
    return exit_config_error;
}

}  // namespace qbsde::cli
