#include "qbsde/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include "qbsde/checkpoint.hpp"
#include "qbsde/mlp.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/vqc.hpp"

namespace qbsde {

namespace {

std::uint64_t hash_text(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string_view to_string(ProblemFamily family) noexcept {
    switch (family) {
        case ProblemFamily::black_scholes: return "black_scholes";
        case ProblemFamily::hjb: return "hjb";
        case ProblemFamily::constant: return "constant";
    }
    return "unknown";
}

std::string_view to_string(Architecture arch) noexcept {
    switch (arch) {
        case Architecture::mlp: return "mlp";
        case Architecture::vqc: return "vqc";
        case Architecture::zero: return "zero";
    }
    return "unknown";
}

std::string_view to_string(RunStatus status) noexcept {
    return status == RunStatus::ok ? "ok" : "failed";
}

ProblemFamily parse_problem_family(std::string_view text) {
    if (text == "black_scholes") return ProblemFamily::black_scholes;
    if (text == "hjb") return ProblemFamily::hjb;
    if (text == "constant") return ProblemFamily::constant;
    throw std::invalid_argument("unknown problem family '" + std::string(text) + "'");
}

Architecture parse_architecture(std::string_view text) {
    if (text == "mlp") return Architecture::mlp;
    if (text == "vqc") return Architecture::vqc;
    if (text == "zero") return Architecture::zero;
    throw std::invalid_argument("unknown architecture '" + std::string(text) + "'");
}

void ProblemConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("problem horizon must be positive and finite");
    }
    switch (family) {
        case ProblemFamily::black_scholes: black_scholes.validate(); break;
        case ProblemFamily::hjb: hjb.validate(); break;
        case ProblemFamily::constant:
            if (constant_dim == 0) throw std::invalid_argument("constant problem needs dim >= 1");
            if (!std::isfinite(constant_value)) {
                throw std::invalid_argument("constant problem value must be finite");
            }
            break;
    }
}

std::size_t ProblemConfig::dim() const {
    switch (family) {
        case ProblemFamily::black_scholes: return black_scholes.num_options;
        case ProblemFamily::hjb: return hjb.dim;
        case ProblemFamily::constant: return constant_dim;
    }
    return 0;
}

void ArchitectureSpec::validate() const {
    if (kind == Architecture::mlp) {
        if (mlp_hidden.empty()) throw std::invalid_argument("mlp needs at least one hidden layer");
        for (std::size_t w : mlp_hidden) {
            if (w == 0) throw std::invalid_argument("mlp hidden widths must be positive");
        }
    }
    if (kind == Architecture::vqc) {
        if (n_qubits == 0 || n_qubits > quantum::kMaxQubits) {
            throw std::invalid_argument("vqc n_qubits must be in [1, " +
                                        std::to_string(quantum::kMaxQubits) + "]");
        }
        if (n_layers == 0) throw std::invalid_argument("vqc n_layers must be positive");
    }
}

ProblemSpec build_problem(const ProblemConfig& config) {
    config.validate();
    switch (config.family) {
        case ProblemFamily::black_scholes:
            return make_black_scholes(config.black_scholes, config.horizon);
        case ProblemFamily::hjb: return make_hjb(config.hjb, config.horizon);
        case ProblemFamily::constant:
            return make_constant(config.constant_dim, config.constant_value, config.horizon);
    }
    throw std::logic_error("build_problem: unhandled family");
}

std::unique_ptr<Approximator> build_approximator(const ArchitectureSpec& arch, std::size_t dim,
                                                 std::uint64_t seed) {
    arch.validate();
    switch (arch.kind) {
        case Architecture::mlp:
            return std::make_unique<MlpModel>(MlpModel::with_hidden(dim, arch.mlp_hidden, seed));
        case Architecture::vqc:
            return std::make_unique<VqcModel>(dim, arch.n_qubits, arch.n_layers, arch.adapter_seed,
                                              seed);
        case Architecture::zero: return std::make_unique<ZeroApproximator>(dim);
    }
    throw std::logic_error("build_approximator: unhandled architecture");
}

MonteCarloEstimate problem_oracle(const ProblemConfig& config, const OracleSettings& settings) {
    config.validate();
    switch (config.family) {
        case ProblemFamily::black_scholes:
            return {bs_closed_form(config.black_scholes, config.horizon), 0.0};
        case ProblemFamily::hjb: {
            const std::vector<double> origin(config.hjb.dim, 0.0);
            return hjb_exact(config.hjb, config.horizon, origin, 0.0, settings.mc_samples,
                             settings.seed);
        }
        case ProblemFamily::constant: return {config.constant_value, 0.0};
    }
    throw std::logic_error("problem_oracle: unhandled family");
}

std::vector<double> default_strike_grid() { return {70, 80, 90, 100, 110, 120, 130, 140}; }

std::vector<double> default_lambda_grid() {
    std::vector<double> out;
    for (int l = 1; l <= 20; ++l) out.push_back(l);
    for (int l : {30, 40, 50, 60}) out.push_back(l);
    return out;
}

std::vector<SweepPoint> black_scholes_points(const std::vector<double>& strikes,
                                             const std::vector<OptionType>& types) {
    std::vector<SweepPoint> out;
    for (OptionType type : types) {
        for (double k : strikes) out.push_back({k, std::string(to_string(type))});
    }
    return out;
}

std::vector<SweepPoint> hjb_points(const std::vector<double>& lambdas) {
    std::vector<SweepPoint> out;
    for (double l : lambdas) out.push_back({l, "lambda"});
    return out;
}

std::vector<SweepPoint> constant_points(const std::vector<double>& values) {
    std::vector<SweepPoint> out;
    for (double v : values) out.push_back({v, "constant"});
    return out;
}

ProblemConfig at_point(const ProblemConfig& base, const SweepPoint& point) {
    ProblemConfig out = base;
    switch (base.family) {
        case ProblemFamily::black_scholes:
            out.black_scholes.strike = point.value;
            out.black_scholes.type = parse_option_type(point.label);
            break;
        case ProblemFamily::hjb:
            if (point.label != "lambda") {
                throw std::invalid_argument("hjb sweep points must be labelled 'lambda'");
            }
            out.hjb.lambda = point.value;
            break;
        case ProblemFamily::constant:
            if (point.label != "constant") {
                throw std::invalid_argument("constant sweep points must be labelled 'constant'");
            }
            out.constant_value = point.value;
            break;
    }
    out.validate();
    return out;
}

void SweepSpec::validate() const {
    problem.validate();
    solver.validate();
    if (points.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (architectures.empty()) throw std::invalid_argument("sweep needs at least one architecture");
    if (repetitions == 0) throw std::invalid_argument("sweep repetitions must be >= 1");
    if (oracle.mc_samples < 2) throw std::invalid_argument("oracle needs at least 2 samples");
    for (const auto& arch : architectures) arch.validate();
    for (const auto& p : points) (void)at_point(problem, p);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (points[i] == points[j]) throw std::invalid_argument("duplicate sweep value");
        }
    }
}

std::uint64_t derive_seed(std::uint64_t base_seed, const SweepPoint& point, std::size_t rep) {
    std::uint64_t h = mix64(base_seed);
    h = hash_combine(h, std::bit_cast<std::uint64_t>(point.value));
    h = hash_combine(h, hash_text(point.label));
    return hash_combine(h, rep);
}

std::size_t ExperimentReport::num_failed() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [](const RunRecord& r) { return r.status != RunStatus::ok; }));
}

ExperimentReport run_sweep(const SweepSpec& spec, std::size_t workers,
                           const SweepProgress& progress) {
    spec.validate();
    const std::size_t n_points = spec.points.size();
    const std::size_t n_arch = spec.architectures.size();
    const std::size_t reps = spec.repetitions;

    std::vector<std::uint64_t> seeds(n_points * reps);
    {
        std::set<std::uint64_t> seen;
        for (std::size_t p = 0; p < n_points; ++p) {
            for (std::size_t r = 0; r < reps; ++r) {
                const std::uint64_t s = derive_seed(spec.base_seed, spec.points[p], r);
                if (!seen.insert(s).second) {
                    throw std::logic_error("derived seed collision in sweep");
                }
                seeds[p * reps + r] = s;
            }
        }
    }

    std::vector<MonteCarloEstimate> oracles(n_points);
    if (spec.problem.family == ProblemFamily::hjb) {
        std::vector<double> lambdas;
        for (const auto& p : spec.points) lambdas.push_back(p.value);
        const std::vector<double> origin(spec.problem.hjb.dim, 0.0);
        oracles = hjb_exact(lambdas, spec.problem.horizon, origin, 0.0, spec.oracle.mc_samples,
                            spec.oracle.seed);
    } else {
        for (std::size_t p = 0; p < n_points; ++p) {
            oracles[p] = problem_oracle(at_point(spec.problem, spec.points[p]), spec.oracle);
            if (spec.problem.family == ProblemFamily::black_scholes && !(oracles[p].value > 0.0)) {
                throw std::logic_error("Black-Scholes oracle must be strictly positive");
            }
        }
    }

    ExperimentReport report;
    report.points = spec.points;
    for (const auto& arch : spec.architectures) {
        report.architectures.emplace_back(to_string(arch.kind));
    }
    const std::size_t n_jobs = n_points * n_arch * reps;
    report.records.resize(n_jobs);

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
            const std::size_t p = job / (n_arch * reps);
            const std::size_t a = (job / reps) % n_arch;
            const std::size_t r = job % reps;
            RunRecord rec;
            rec.point_index = p;
            rec.arch_index = a;
            rec.repetition = r;
            rec.seed = seeds[p * reps + r];
            rec.oracle = oracles[p].value;
            rec.oracle_std_error = oracles[p].std_error;
            try {
                const ProblemSpec problem = build_problem(at_point(spec.problem, spec.points[p]));
                auto approx = build_approximator(spec.architectures[a], problem.dim, rec.seed);
                SolverConfig cfg = spec.solver;
                cfg.seed = rec.seed;
                TrainReport tr = train(problem, cfg, *approx, rec.oracle);
                rec.y0 = tr.y0;
                rec.abs_err = std::abs(tr.y0 - rec.oracle);
                rec.rel_err = relative_error(tr.y0, rec.oracle);
                rec.losses = std::move(tr.losses);
            } catch (const DivergenceError& e) {
                rec.status = RunStatus::failed;
                rec.message = e.what();
            }
            report.records[job] = std::move(rec);
            if (progress) {
                const std::lock_guard lock(progress_mutex);
                progress(report, report.records[job]);
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, n_jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    return report;
}

std::vector<SummaryRow> summarize(const ExperimentReport& report) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const RunRecord*>> groups;
    for (const auto& rec : report.records) groups[{rec.point_index, rec.arch_index}].push_back(&rec);

    std::vector<SummaryRow> rows;
    for (std::size_t p = 0; p < report.points.size(); ++p) {
        for (std::size_t a = 0; a < report.architectures.size(); ++a) {
            SummaryRow row;
            row.point = report.points[p];
            row.arch = report.architectures[a];
            std::vector<double> errs;
            if (auto it = groups.find({p, a}); it != groups.end()) {
                for (const RunRecord* rec : it->second) {
                    if (rec->status == RunStatus::ok) {
                        errs.push_back(100.0 * rec->rel_err);
                    } else {
                        ++row.n_failed;
                    }
                }
            }
            row.n_seeds = errs.size();
            if (!errs.empty()) {
                double mean = 0.0;
                for (double e : errs) mean += e;
                mean /= static_cast<double>(errs.size());
                row.mean_rel_err_pct = mean;
                if (errs.size() > 1) {
                    double ss = 0.0;
                    for (double e : errs) ss += (e - mean) * (e - mean);
                    row.std_rel_err_pct = std::sqrt(ss / static_cast<double>(errs.size() - 1));
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<double> mean_loss_curve(const ExperimentReport& report, std::size_t point_index,
                                    std::size_t arch_index) {
    std::vector<double> sum;
    std::size_t count = 0;
    for (const auto& rec : report.records) {
        if (rec.point_index != point_index || rec.arch_index != arch_index) continue;
        if (rec.status != RunStatus::ok) continue;
        if (sum.empty()) sum.assign(rec.losses.size(), 0.0);
        if (rec.losses.size() != sum.size()) {
            throw std::logic_error("mean_loss_curve: runs have different iteration counts");
        }
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += rec.losses[i];
        ++count;
    }
    for (double& v : sum) v /= static_cast<double>(count);
    return sum;
}

const std::vector<std::string>& runs_csv_columns() {
    static const std::vector<std::string> cols{"sweep_value", "option_type_or_lambda", "arch",
                                               "seed",        "y0",                    "oracle",
                                               "rel_err",     "abs_err",               "status"};
    return cols;
}

const std::vector<std::string>& summary_csv_columns() {
    static const std::vector<std::string> cols{
        "sweep_value", "option_type_or_lambda", "arch",    "mean_rel_err_pct",
        "std_rel_err_pct", "n_seeds",           "n_failed"};
    return cols;
}

const std::vector<std::string>& loss_csv_columns() {
    static const std::vector<std::string> cols{"sweep_value", "option_type_or_lambda", "arch",
                                               "iteration", "mean_loss"};
    return cols;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << fields[i];
    }
    out << '\n';
}

void write_runs_csv(std::ostream& out, const ExperimentReport& report) {
    write_csv_row(out, runs_csv_columns());
    for (const auto& rec : report.records) {
        const auto& point = report.points.at(rec.point_index);
        const bool ok = rec.status == RunStatus::ok;
        write_csv_row(out, {format_double(point.value), point.label,
                            report.architectures.at(rec.arch_index), std::to_string(rec.seed),
                            ok ? format_double(rec.y0) : "", format_double(rec.oracle),
                            ok ? format_double(rec.rel_err) : "",
                            ok ? format_double(rec.abs_err) : "", std::string(to_string(rec.status))});
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    write_csv_row(out, summary_csv_columns());
    for (const auto& row : rows) {
        write_csv_row(out, {format_double(row.point.value), row.point.label, row.arch,
                            row.mean_rel_err_pct ? format_double(*row.mean_rel_err_pct) : "",
                            row.std_rel_err_pct ? format_double(*row.std_rel_err_pct) : "",
                            std::to_string(row.n_seeds), std::to_string(row.n_failed)});
    }
}

void write_loss_csv(std::ostream& out, const ExperimentReport& report) {
    write_csv_row(out, loss_csv_columns());
    for (std::size_t p = 0; p < report.points.size(); ++p) {
        for (std::size_t a = 0; a < report.architectures.size(); ++a) {
            const auto curve = mean_loss_curve(report, p, a);
            for (std::size_t i = 0; i < curve.size(); ++i) {
                write_csv_row(out, {format_double(report.points[p].value), report.points[p].label,
                                    report.architectures[a], std::to_string(i),
                                    format_double(curve[i])});
            }
        }
    }
}

}  // namespace qbsde
