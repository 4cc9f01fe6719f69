#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluctlab/cli_reports.hpp"
#include "fluctlab/errors.hpp"

using namespace fluctlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const std::string& preset, const std::string& out) {
    ExperimentConfig cfg;
    cfg.preset = preset;
    cfg.n_grid = {2, 4};
    cfg.paths_per_n = 400;
    cfg.horizon = 2000.0;
    cfg.seed_base = 0xAA55;
    cfg.output_dir = out;
    return cfg;
}

}  // namespace

TEST_CASE("config json round trip and overrides") {
    const std::string text = R"({
        "preset": "crit-exp-B1-theta2",
        "n_grid": [4, 16],
        "paths_per_n": 500,
        "horizon": 123.0,
        "seed_base": 99,
        "tolerances": {"tv_threshold": 0.5},
        "formats": ["json"]
    })";
    const auto cfg = config_from_json_text(text);
    CHECK(cfg.preset == "crit-exp-B1-theta2");
    CHECK(cfg.n_grid == std::vector<int>{4, 16});
    CHECK(cfg.paths_per_n == 500);
    CHECK(cfg.horizon == 123.0);
    CHECK(cfg.seed_base == 99);
    CHECK(cfg.thresholds().tv_threshold == 0.5);
    CHECK(!cfg.emit_csv);
    CHECK(cfg.emit_json);
    CHECK_THROWS_AS((void)config_from_json_text("{oops"), Error);
    ExperimentConfig bad;
    bad.preset = "no-such-preset";
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("analytic rows of the B1 preset") {
    ExperimentConfig cfg = small_config("crit-exp-B1-theta2", "test_out_calc");
    cfg.n_grid = {4, 16, 64};
    const auto bundle = run_experiment(cfg, RunMode::calc);
    REQUIRE(bundle.analytic.size() == 3);
    for (const auto& row : bundle.analytic) {
        CHECK(row.eta == 0.0);
        CHECK(row.mu_plus_mass == doctest::Approx(row.n).epsilon(1e-7));
        CHECK(row.lambda_n == doctest::Approx(2.0).epsilon(1e-7));
        CHECK(row.alpha == doctest::Approx(row.n));
        CHECK(row.kill == 0.0);
    }
    CHECK(bundle.has_limit);
    CHECK(bundle.limit.b2 == doctest::Approx(2.0));
    CHECK(bundle.limit.theta == doctest::Approx(2.0));
    CHECK(bundle.verdict == "pass");
    fs::remove_all("test_out_calc");
}

TEST_CASE("deterministic outputs and resumable converge runs") {
    const fs::path dir = "test_out_converge";
    fs::remove_all(dir);
    ExperimentConfig cfg = small_config("drift-only", dir.string());
    const auto b1 = run_experiment(cfg, RunMode::converge);
    CHECK(emit_outputs(b1) == 0);
    const std::string distances_first = slurp(dir / "distances.csv");
    const std::string analytic_first = slurp(dir / "analytic_params.csv");

    // Second run reuses the per-n partials and reproduces the CSVs.
    const auto b2 = run_experiment(cfg, RunMode::converge);
    CHECK(emit_outputs(b2) == 0);
    CHECK(slurp(dir / "distances.csv") == distances_first);
    CHECK(slurp(dir / "analytic_params.csv") == analytic_first);

    // A fresh directory gives bit-identical CSVs too.
    const fs::path dir2 = "test_out_converge_b";
    fs::remove_all(dir2);
    cfg.output_dir = dir2.string();
    const auto b3 = run_experiment(cfg, RunMode::converge);
    CHECK(emit_outputs(b3) == 0);
    CHECK(slurp(dir2 / "distances.csv") == distances_first);

    // Summary JSON round-trips verdict and distances.
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j.at("verdict").get<std::string>() == b1.verdict);
    CHECK(j.at("distances").size() == b1.distances.size());
    for (std::size_t i = 0; i < b1.distances.size(); ++i) {
        CHECK(j.at("distances")[i].at("value").get<double>() == b1.distances[i].value);
        CHECK(j.at("distances")[i].at("pass").get<bool>() == b1.distances[i].pass);
    }
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("thread count does not change results") {
    const fs::path dir = "test_out_threads";
    fs::remove_all(dir);
    ExperimentConfig cfg = small_config("crit-exp-B1-theta2", dir.string());
    cfg.n_grid = {4};
    cfg.paths_per_n = 3000;
    cfg.horizon = 4000.0;

    setenv("FLUCTLAB_THREADS", "1", 1);
    const auto a = run_experiment(cfg, RunMode::converge);
    fs::remove_all(dir);
    setenv("FLUCTLAB_THREADS", "3", 1);
    const auto b = run_experiment(cfg, RunMode::converge);
    unsetenv("FLUCTLAB_THREADS");
    fs::remove_all(dir);
    REQUIRE(a.distances.size() == b.distances.size());
    for (std::size_t i = 0; i < a.distances.size(); ++i)
        CHECK(a.distances[i].value == b.distances[i].value);  // bit-identical
}

TEST_CASE("interrupted converge runs resume by n-index") {
    const fs::path dir = "test_out_resume";
    fs::remove_all(dir);
    ExperimentConfig cfg = small_config("drift-only", dir.string());
    cfg.n_grid = {2};
    const auto first = run_experiment(cfg, RunMode::converge);
    CHECK(fs::exists(dir / "partial_drift-only_n2.json"));

    // Extending the grid recomputes only the new index; the shared n = 2
    // rows come back identical from the partial file.
    cfg.n_grid = {2, 4};
    const auto second = run_experiment(cfg, RunMode::converge);
    bool found = false;
    for (const auto& d : second.distances) {
        for (const auto& e : first.distances) {
            if (d.label == e.label && d.n_index == e.n_index && d.metric == e.metric) {
                CHECK(d.value == e.value);
                found = true;
            }
        }
    }
    CHECK(found);
    fs::remove_all(dir);
}

TEST_CASE("verify mode emits identity rows that pass") {
    ExperimentConfig cfg = small_config("supercrit-exp-2", "test_out_verify");
    cfg.paths_per_n = 2000;
    cfg.horizon = 300.0;
    const auto bundle = run_experiment(cfg, RunMode::verify);
    CHECK(bundle.verdict == "pass");
    bool saw_identity = false;
    for (const auto& d : bundle.distances)
        if (d.metric == "identity") saw_identity = true;
    CHECK(saw_identity);
    fs::remove_all("test_out_verify");
}

TEST_CASE("empty bundle has verdict no-op; failing rows flip the exit code") {
    ReportBundle empty;
    empty.config.output_dir = "test_out_noop";
    CHECK(empty.verdict == "no-op");
    CHECK(emit_outputs(empty) == 0);
    const auto j = nlohmann::json::parse(slurp(fs::path("test_out_noop") / "summary.json"));
    CHECK(j.at("verdict").get<std::string>() == "no-op");
    fs::remove_all("test_out_noop");

    // An impossible threshold forces a failing row and exit code 1.
    ExperimentConfig cfg = small_config("crit-exp-B1-theta2", "test_out_fail");
    cfg.n_grid = {4};
    cfg.paths_per_n = 1000;
    cfg.horizon = 3000.0;
    cfg.tolerance_overrides["tv_threshold"] = 0.0;
    const auto bundle = run_experiment(cfg, RunMode::converge);
    CHECK(bundle.verdict == "fail");
    CHECK(emit_outputs(bundle) == 1);
    bool saw_fail_row = false;
    for (const auto& d : bundle.distances)
        if (!d.pass) saw_fail_row = true;
    CHECK(saw_fail_row);
    fs::remove_all("test_out_fail");
}

TEST_CASE("laplace grid distance on exact data") {
    SampleSet zeros;
    zeros.label = "zeros";
    zeros.values.assign(2000, 0.0);
    zeros.values2.assign(2000, 0.0);
    const auto rep = laplace_grid_distance(
        zeros, [](double, double) { return 0.0; }, {0.0, 1.0}, {0.0, 1.0});
    CHECK(rep.pass);
    CHECK(rep.metric == "laplace-gap");
    // A wrong exponent fails decisively.
    const auto bad = laplace_grid_distance(
        zeros, [](double beta, double gamma) { return 0.5 * (beta + gamma); }, {0.0, 1.0},
        {0.0, 1.0});
    CHECK(!bad.pass);
}

TEST_CASE("converge on a non-scalable preset is a usage error") {
    ExperimentConfig cfg = small_config("subcrit-exp-half", "test_out_usage");
    CHECK_THROWS_AS((void)run_experiment(cfg, RunMode::converge), Error);
}
