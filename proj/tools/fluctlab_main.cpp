#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluctlab/cli_reports.hpp"
#include "fluctlab/errors.hpp"
#include "fluctlab/ladder_decomposition.hpp"
#include "fluctlab/path_simulator.hpp"

namespace {

using namespace fluctlab;

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(std::stoi(item));
    return grid;
}

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string n_grid;
    std::uint64_t paths = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    std::string format;
};

ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = config_from_json_file(flags.config_path);
    if (!flags.preset.empty()) cfg.preset = flags.preset;
    if (!flags.n_grid.empty()) cfg.n_grid = parse_grid(flags.n_grid);
    if (flags.paths > 0) cfg.paths_per_n = flags.paths;
    if (flags.seed_set) cfg.seed_base = flags.seed;
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    if (!flags.format.empty()) {
        cfg.emit_csv = flags.format.find("csv") != std::string::npos;
        cfg.emit_json = flags.format.find("json") != std::string::npos;
    }
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file; flags override fields");
    cmd->add_option("--preset", flags.preset, "registered preset id");
    cmd->add_option("--n-grid", flags.n_grid, "comma-separated n indices, e.g. 4,16,64");
    cmd->add_option("--paths", flags.paths, "paths per n");
    cmd->add_option("--seed", flags.seed, "64-bit seed base")->each([&flags](const std::string&) {
        flags.seed_set = true;
    });
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--format", flags.format, "outputs to emit: csv,json");
}

int run_bundle(const CommonFlags& flags, RunMode mode) {
    const ExperimentConfig cfg = resolve_config(flags);
    const ReportBundle bundle = run_experiment(cfg, mode);
    const int code = emit_outputs(bundle);
    for (const auto& d : bundle.distances)
        std::printf("[%s] %-6s %-46s n=%-3d value=%.6g threshold=%.6g N=%zu\n",
                    d.pass ? "pass" : "FAIL", d.metric.c_str(), d.label.c_str(), d.n_index,
                    d.value, d.threshold, d.sample_size);
    std::printf("verdict: %s (%.0f ms, outputs in %s)\n", bundle.verdict.c_str(),
                bundle.runtime.wall_ms, cfg.output_dir.c_str());
    return code;
}

int run_paths(const CommonFlags& flags, int n, double horizon, std::uint64_t count,
              bool ladder) {
    const ExperimentConfig cfg = resolve_config(flags);
    const Preset& preset = find_preset(cfg.preset);
    std::filesystem::create_directories(cfg.output_dir);
    ProcessSpec spec = preset.base;
    MarkRule mark = preset.base_mark;
    double alpha = 1.0;
    if (n > 1 && preset.scalable && preset.family) {
        spec = preset.family->member(n);
        mark = preset.family->mark_rule(n).rescaled(n);
        alpha = preset.family->scaling(n).alpha();
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t seed = grid_seed(cfg.seed_base, std::max(n, 1), i);
        const MarkedPath path = sample_marked_path(spec, mark, horizon, seed);
        const std::string stem = (ladder ? "ladder_" : "path_") + std::to_string(i) + ".csv";
        std::ofstream out(std::filesystem::path(cfg.output_dir) / stem, std::ios::binary);
        if (ladder) {
            const auto points = record_decomposition(path);
            const auto clock = local_time_clock(points, alpha, horizon, seed ^ STREAM_CLOCK);
            out << ladder_to_csv(trivariate_ladder(points, clock));
        } else {
            out << path_to_csv(path);
        }
    }
    std::printf("wrote %llu %s files to %s\n", static_cast<unsigned long long>(count),
                ladder ? "ladder" : "path", cfg.output_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluctlab: marked Levy paths, their ladder structure, and limit checks"};
    app.require_subcommand(1);

    CommonFlags flags;
    int sim_n = 1;
    double sim_horizon = 100.0;
    std::uint64_t sim_count = 1;

    auto* calc = app.add_subcommand("calc", "analytic tables only");
    add_common(calc, flags);
    auto* simulate = app.add_subcommand("simulate", "sample paths and dump event CSVs");
    add_common(simulate, flags);
    simulate->add_option("--n", sim_n, "scaling index (1 = unscaled)");
    simulate->add_option("--horizon", sim_horizon, "path horizon");
    simulate->add_option("--count", sim_count, "number of paths");
    auto* ladder = app.add_subcommand("ladder", "simulate, decompose, dump ladder CSVs");
    add_common(ladder, flags);
    ladder->add_option("--n", sim_n, "scaling index (1 = unscaled)");
    ladder->add_option("--horizon", sim_horizon, "path horizon");
    ladder->add_option("--count", sim_count, "number of paths");
    auto* verify = app.add_subcommand("verify", "fixed-n analytic and distribution checks");
    add_common(verify, flags);
    auto* converge = app.add_subcommand("converge", "n-grid trend experiment");
    add_common(converge, flags);
    auto* all = app.add_subcommand("all", "calc + verify + converge");
    add_common(all, flags);

    try {
        app.parse(argc, argv);
        if (calc->parsed()) return run_bundle(flags, fluctlab::RunMode::calc);
        if (simulate->parsed()) return run_paths(flags, sim_n, sim_horizon, sim_count, false);
        if (ladder->parsed()) return run_paths(flags, sim_n, sim_horizon, sim_count, true);
        if (verify->parsed()) return run_bundle(flags, fluctlab::RunMode::verify);
        if (converge->parsed()) return run_bundle(flags, fluctlab::RunMode::converge);
        if (all->parsed()) return run_bundle(flags, fluctlab::RunMode::all);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const fluctlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
            case fluctlab::ErrorKind::usage: return 2;
            case fluctlab::ErrorKind::numeric: return 3;
            default: return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
