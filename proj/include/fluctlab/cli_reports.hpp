#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fluctlab/convergence_lab.hpp"
#include "fluctlab/presets.hpp"

namespace fluctlab {

struct ExperimentConfig {
    std::string preset = "crit-exp-B1-theta2";
    std::vector<int> n_grid = {4, 16, 64};
    std::uint64_t paths_per_n = 10000;
    double horizon = 4000.0;  // path-time cap, rescaled units
    std::uint64_t seed_base = 0xF1C71AB05EED0001ULL;
    std::map<std::string, double> tolerance_overrides;
    std::string output_dir = "out";
    bool emit_csv = true;
    bool emit_json = true;

    void validate() const;
    Thresholds thresholds() const;  // defaults + overrides
    Tolerances tolerances() const;
    std::uint64_t per_n_config_hash(int n) const;  // resumability key
};

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

struct AnalyticRow {
    int n = 1;
    double psi_at_1 = 0.0;   // psi~_n(1)
    double eta = 0.0;
    double phi_at_1 = 0.0;   // phi~_n(1)
    double mu_plus_mass = 0.0;
    double lambda_n = 0.0;
    double kill = 0.0;
    double alpha = 0.0;  // d_n / n
};

struct RuntimeMeta {
    double wall_ms = 0.0;
    std::string rng = rng_identity();
    int threads = 1;
};

struct ReportBundle {
    ExperimentConfig config;
    std::vector<AnalyticRow> analytic;
    LimitSpec limit;        // zeros for non-scalable presets
    bool has_limit = false;
    std::vector<DistanceReport> distances;
    std::vector<std::string> errors;
    std::string verdict = "no-op";  // "pass", "fail", or "no-op" when empty
    RuntimeMeta runtime;

    bool pass() const { return verdict != "fail"; }
};

enum class RunMode { calc, verify, converge, all };

// Full pipeline: calculus -> simulate -> ladder -> compare, deterministic
// given seed_base. Per-n partial results are flushed to the output directory
// so interrupted converge runs resume by n-index.
ReportBundle run_experiment(const ExperimentConfig& config, RunMode mode);

// Writes analytic_params.csv, distances.csv and summary.json (per config
// formats). Returns the process exit code: 0 pass, 1 verdict fail.
int emit_outputs(const ReportBundle& bundle);

std::string bundle_summary_json(const ReportBundle& bundle);
std::string distances_csv(const std::vector<DistanceReport>& rows);
std::string analytic_csv(const std::vector<AnalyticRow>& rows);

// --- shared experiment machinery (also used by the acceptance suite) -------

int worker_count();  // FLUCTLAB_THREADS override, else hardware concurrency

struct WindowMarginals {
    SampleSet h_plus;  // H+(budget) over complete windows
    SampleSet h_mark;  // HM(budget) over complete windows
    SampleSet mark_time;  // first-mark local times with censor flags
    std::uint64_t complete = 0;
    std::uint64_t total = 0;
};

// Runs `paths` independent windowed ladder observations of the rescaled
// preset member at index n (n = 0 means the unscaled base process) on a
// worker pool; merging is ordered by replicate index, so results are
// bit-identical for any thread count.
WindowMarginals collect_window_marginals(const Preset& preset, int n, std::uint64_t paths,
                                         const WindowConfig& cfg, std::uint64_t seed_base);

// Pooled ladder points (undershoot, overshoot, mark) from windows.
struct PooledPoints {
    SampleSet pairs;              // values = undershoot, values2 = overshoot
    std::vector<int> marks;
    std::uint64_t complete = 0, total = 0;
};
PooledPoints collect_window_points(const Preset& preset, int n, std::uint64_t paths,
                                   const WindowConfig& cfg, std::uint64_t seed_base);

// Total local times of full ladders (subcritical presets).
SampleSet collect_total_local_times(const Preset& preset, std::uint64_t paths, double horizon,
                                    double min_gap, std::uint64_t seed_base);

}  // namespace fluctlab
