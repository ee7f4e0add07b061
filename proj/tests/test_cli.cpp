#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qbsde/cli.hpp"

using namespace qbsde;
using namespace qbsde::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("qbsde_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& path) {
    std::istringstream is(slurp(path));
    std::vector<std::string> out;
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path path = dir / "config.json";
    std::ofstream(path) << doc.dump(2);
    return path;
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

json constant_config(const fs::path& dir) {
    RunConfig c = template_config();
    c.output_dir = (dir / "out").string();
    c.problem.family = ProblemFamily::constant;
    c.problem.constant_dim = 1;
    c.problem.constant_value = 2.0;
    c.architecture.kind = Architecture::zero;
    c.solver.num_paths = 1000;
    c.solver.seed = 3;
    c.sweep.reset();
    return to_json(c);
}

json tiny_solver() {
    return {{"num_paths", 100},   {"batch_size", 100}, {"epochs", 1},       {"num_steps", 4},
            {"learning_rate", 0.01}, {"y0_init_halfwidth", 0.1}, {"shuffle", false}, {"seed", 1}};
}

void check_golden_header(const fs::path& file) {
    const fs::path golden = fs::path(QBSDE_GOLDEN_DIR) / file.filename();
    CAPTURE(file.string());
    REQUIRE(fs::exists(file));
    CHECK(lines(file).front() == lines(golden).front());
}

}  // namespace

TEST_CASE("init template parses back identically") {
    const auto dir = scratch("init");
    const auto path = dir / "qbsde.json";
    REQUIRE(run({"init", "--config", path.string()}).code == exit_ok);
    const json written = json::parse(slurp(path));
    CHECK(to_json(load_config(path)) == written);
    CHECK(written["schema_version"] == "qbsde-config/1");
    CHECK(to_json(template_config()) == written);
    CHECK(run({"init", "--config", path.string()}).code == exit_config_error);
}

TEST_CASE("configuration errors exit with code 2 and write nothing") {
    const auto dir = scratch("bad_config");
    const json good = constant_config(dir);

    auto expect_config_error = [&](const json& doc, const std::string& needle) {
        const auto path = write_config(dir, doc);
        const auto r = run({"train", "--config", path.string()});
        CAPTURE(needle);
        CHECK(r.code == exit_config_error);
        CHECK(r.err.find(needle) != std::string::npos);
        CHECK_FALSE(fs::exists(dir / "out"));
    };

    json unknown = good;
    unknown["solver"]["momentum"] = 0.9;
    expect_config_error(unknown, "unknown key solver.momentum");

    json top_unknown = good;
    top_unknown["extra"] = 1;
    expect_config_error(top_unknown, "unknown key config.extra");

    json missing = good;
    missing["solver"].erase("epochs");
    expect_config_error(missing, "missing required key solver.epochs");

    json version = good;
    version["schema_version"] = "qbsde-config/2";
    expect_config_error(version, "schema_version");

    json wrong_type = good;
    wrong_type["solver"]["num_paths"] = "many";
    expect_config_error(wrong_type, "solver.num_paths");

    json negative = good;
    negative["solver"]["seed"] = -4;
    expect_config_error(negative, "solver.seed");

    json indivisible = good;
    indivisible["solver"]["num_paths"] = 1050;
    expect_config_error(indivisible, "solver");

    json family = good;
    family["problem"]["family"] = "heat";
    expect_config_error(family, "heat");

    json foreign = good;
    foreign["problem"]["strike"] = 100;
    expect_config_error(foreign, "unknown key problem.strike");

    const auto bad_json = dir / "broken.json";
    std::ofstream(bad_json) << "{ not json";
    CHECK(run({"train", "--config", bad_json.string()}).code == exit_config_error);
    CHECK(run({"train", "--config", (dir / "absent.json").string()}).code == exit_config_error);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("command-line errors exit with code 2") {
    CHECK(run({}).code == exit_config_error);
    CHECK(run({"fly"}).code == exit_config_error);
    CHECK(run({"train"}).code == exit_config_error);
    CHECK(run({"train", "--config", "x.json", "--bogus"}).code == exit_config_error);
    CHECK(run({"sweep", "--config", "x.json", "--workers", "0"}).code == exit_config_error);
    CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("train on the degenerate problem succeeds and is byte-reproducible") {
    const auto dir = scratch("train");
    const auto path = write_config(dir, constant_config(dir));
    const auto r = run({"train", "--config", path.string()});
    REQUIRE(r.code == exit_ok);
    CHECK(r.out.find("rel_err") != std::string::npos);

    const auto out = dir / "out";
    check_golden_header(out / "train_loss.csv");
    check_golden_header(out / "train_summary.csv");
    CHECK(fs::exists(out / "checkpoint.txt"));
    const auto summary = lines(out / "train_summary.csv");
    REQUIRE(summary.size() == 2);
    const auto fields = split(summary[1]);
    CHECK(fields[0] == "constant");
    CHECK(fields[2] == "3");
    CHECK(std::stod(fields[6]) <= 1e-3);
    CHECK(lines(out / "train_loss.csv").size() == 1 + 100);

    const auto first_loss = slurp(out / "train_loss.csv");
    const auto first_summary = slurp(out / "train_summary.csv");
    const auto first_ckpt = slurp(out / "checkpoint.txt");
    REQUIRE(run({"train", "--config", path.string(), "--out", (dir / "again").string()}).code ==
            exit_ok);
    CHECK(slurp(dir / "again" / "train_loss.csv") == first_loss);
    CHECK(slurp(dir / "again" / "train_summary.csv") == first_summary);
    CHECK(slurp(dir / "again" / "checkpoint.txt") == first_ckpt);

    REQUIRE(run({"train", "--config", path.string(), "--out", (dir / "other").string(),
                 "--seed-override", "99"})
                .code == exit_ok);
    CHECK(split(lines(dir / "other" / "train_summary.csv")[1])[2] == "99");
}

TEST_CASE("train reports divergence with exit code 1") {
    const auto dir = scratch("diverge");
    json doc = constant_config(dir);
    doc["problem"]["value"] = 1e300;
    const auto r = run({"train", "--config", write_config(dir, doc).string()});
    CHECK(r.code == exit_divergence);
    CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("oracle for a single call strike") {
    const auto dir = scratch("oracle_bs");
    RunConfig c = template_config();
    c.output_dir = (dir / "out").string();
    c.sweep.reset();
    const auto path = write_config(dir, to_json(c));
    REQUIRE(run({"oracle", "--config", path.string()}).code == exit_ok);
    check_golden_header(dir / "out" / "oracle.csv");
    const auto rows = lines(dir / "out" / "oracle.csv");
    REQUIRE(rows.size() == 2);
    const auto f = split(rows[1]);
    CHECK(f[0] == "100");
    CHECK(f[1] == "call");
    CHECK(std::stod(f[3]) == doctest::Approx(13.269676584660885).epsilon(1e-13));
}

TEST_CASE("HJB oracle estimates from two seeds agree") {
    const auto dir = scratch("oracle_hjb");
    RunConfig c = template_config();
    c.output_dir = (dir / "out").string();
    c.problem.family = ProblemFamily::hjb;
    c.problem.hjb = {1.0, 100};
    c.oracle.mc_samples = 100000;
    c.oracle.seeds = {1, 2};
    c.sweep.reset();
    REQUIRE(run({"oracle", "--config", write_config(dir, to_json(c)).string()}).code == exit_ok);
    const auto rows = lines(dir / "out" / "oracle.csv");
    REQUIRE(rows.size() == 3);
    const auto a = split(rows[1]);
    const auto b = split(rows[2]);
    CHECK(a[2] == "1");
    CHECK(b[2] == "2");
    const double diff = std::abs(std::stod(a[3]) - std::stod(b[3]));
    CHECK(diff <= 4.0 * std::hypot(std::stod(a[4]), std::stod(b[4])));
}

TEST_CASE("sweep of one value and one seed") {
    const auto dir = scratch("sweep_one");
    json doc = constant_config(dir);
    doc["sweep"] = {{"values", {2.0}},
                    {"architectures", {{{"kind", "zero"}}}},
                    {"repetitions", 1},
                    {"base_seed", 5}};
    const auto path = write_config(dir, doc);
    REQUIRE(run({"sweep", "--config", path.string()}).code == exit_ok);
    const auto out = dir / "out";
    check_golden_header(out / "sweep_runs.csv");
    check_golden_header(out / "sweep_summary.csv");
    check_golden_header(out / "sweep_loss.csv");
    CHECK(lines(out / "sweep_runs.csv").size() == 2);
    CHECK(lines(out / "sweep_summary.csv").size() == 2);
    CHECK(split(lines(out / "sweep_runs.csv")[1]).back() == "ok");

    const auto runs = slurp(out / "sweep_runs.csv");
    REQUIRE(run({"sweep", "--config", path.string(), "--workers", "2"}).code == exit_ok);
    CHECK(slurp(out / "sweep_runs.csv") == runs);
}

TEST_CASE("strike sweep over both option types yields 80 rows per architecture") {
    const auto dir = scratch("sweep_strikes");
    RunConfig c = template_config();
    json doc = to_json(c);
    doc["output_dir"] = (dir / "out").string();
    doc["solver"] = tiny_solver();
    doc["sweep"]["architectures"] = {{{"kind", "zero"}}, {{"kind", "mlp"}, {"hidden", {2}}}};
    REQUIRE(run({"sweep", "--config", write_config(dir, doc).string(), "--workers", "2"}).code ==
            exit_ok);
    const auto runs = lines(dir / "out" / "sweep_runs.csv");
    CHECK(runs.size() == 1 + 2 * 80);
    std::size_t mlp_rows = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) mlp_rows += split(runs[i])[2] == "mlp";
    CHECK(mlp_rows == 80);
    CHECK(lines(dir / "out" / "sweep_summary.csv").size() == 1 + 2 * 16);
}

TEST_CASE("lambda sweep over the default grid yields 24 aggregate rows") {
    const auto dir = scratch("sweep_lambda");
    RunConfig c = template_config();
    c.output_dir = (dir / "out").string();
    c.problem.family = ProblemFamily::hjb;
    c.problem.hjb = {1.0, 2};
    c.oracle.mc_samples = 1000;
    json doc = to_json(c);
    doc["solver"] = tiny_solver();
    doc["sweep"] = {{"values", default_lambda_grid()},
                    {"architectures", {{{"kind", "zero"}}}},
                    {"repetitions", 1},
                    {"base_seed", 8}};
    REQUIRE(run({"sweep", "--config", write_config(dir, doc).string()}).code == exit_ok);
    const auto summary = lines(dir / "out" / "sweep_summary.csv");
    CHECK(summary.size() == 1 + 24);
    CHECK(split(summary[1])[1] == "lambda");
}

TEST_CASE("sweep exit codes distinguish partial and total failure") {
    const auto dir = scratch("sweep_fail");
    json doc = constant_config(dir);
    doc["sweep"] = {{"values", {0.5, 1e300}},
                    {"architectures", {{{"kind", "zero"}}}},
                    {"repetitions", 1},
                    {"base_seed", 5}};
    CHECK(run({"sweep", "--config", write_config(dir, doc).string()}).code == exit_partial_sweep);
    const auto runs = lines(dir / "out" / "sweep_runs.csv");
    REQUIRE(runs.size() == 3);
    CHECK(split(runs[2]).back() == "failed");

    doc["sweep"]["values"] = {1e300};
    CHECK(run({"sweep", "--config", write_config(dir, doc).string()}).code == exit_divergence);

    json no_sweep = constant_config(dir);
    CHECK(run({"sweep", "--config", write_config(dir, no_sweep).string()}).code ==
          exit_config_error);
}
