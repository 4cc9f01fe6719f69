#include "fluctlab/cli_reports.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fluctlab/errors.hpp"
#include "fluctlab/quadrature.hpp"
#include "fluctlab/special.hpp"

namespace fluctlab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    find_preset(preset);
    if (n_grid.empty()) throw usage_error("config: n_grid must be nonempty");
    for (int n : n_grid)
        if (n < 1) throw usage_error("config: n indices must be positive");
    if (paths_per_n < 1) throw usage_error("config: paths_per_n must be positive");
    if (!(horizon > 0.0)) throw usage_error("config: horizon must be positive");
}

Thresholds ExperimentConfig::thresholds() const {
    Thresholds t;
    for (const auto& [k, v] : tolerance_overrides) {
        if (k == "ks_coefficient") t.ks_coefficient = v;
        else if (k == "tv_threshold") t.tv_threshold = v;
        else if (k == "chi2_p_min") t.chi2_p_min = v;
        else if (k == "rate_rel_tol") t.rate_rel_tol = v;
        else if (k == "mean_sigmas") t.mean_sigmas = v;
        else if (k == "laplace_sigmas") t.laplace_sigmas = v;
        else if (k == "trend_noise_factor") t.trend_noise_factor = v;
    }
    return t;
}

Tolerances ExperimentConfig::tolerances() const {
    Tolerances t;
    for (const auto& [k, v] : tolerance_overrides) {
        if (k == "psi_quad_rel") t.psi_quad_rel = v;
        else if (k == "eta_abs") t.eta_abs = v;
        else if (k == "phi_rel") t.phi_rel = v;
        else if (k == "volterra_step") t.volterra_step = v;
        else if (k == "volterra_check") t.volterra_check = v;
        else if (k == "ladder_quad_rel") t.ladder_quad_rel = v;
    }
    return t;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t ExperimentConfig::per_n_config_hash(int n) const {
    std::ostringstream os;
    os << preset << '|' << n << '|' << paths_per_n << '|' << horizon << '|' << seed_base;
    for (const auto& [k, v] : tolerance_overrides) os << '|' << k << '=' << v;
    return fnv1a(os.str());
}

ExperimentConfig config_from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw usage_error(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
    if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<int>>();
    if (j.contains("paths_per_n")) c.paths_per_n = j["paths_per_n"].get<std::uint64_t>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
    if (j.contains("seed_base")) c.seed_base = j["seed_base"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("tolerances"))
        for (const auto& [k, v] : j["tolerances"].items())
            c.tolerance_overrides[k] = v.get<double>();
    if (j.contains("formats")) {
        c.emit_csv = false;
        c.emit_json = false;
        for (const auto& f : j["formats"]) {
            if (f.get<std::string>() == "csv") c.emit_csv = true;
            if (f.get<std::string>() == "json") c.emit_json = true;
        }
    }
    return c;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// worker pool
// ---------------------------------------------------------------------------

int worker_count() {
    if (const char* env = std::getenv("FLUCTLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Dispatch [0, total) in fixed chunks to a pool; results are merged in chunk
// order so the outcome is independent of scheduling.
template <typename T, typename Fn>
std::vector<T> map_chunks(std::uint64_t total, std::uint64_t chunk_size, const Fn& fn) {
    const std::uint64_t chunks = total == 0 ? 0 : (total - 1) / chunk_size + 1;
    std::vector<T> results(chunks);
    if (chunks == 0) return results;
    const int workers = std::min<std::uint64_t>(worker_count(), chunks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::uint64_t c; (c = next.fetch_add(1)) < chunks;) {
            try {
                const std::uint64_t begin = c * chunk_size;
                const std::uint64_t end = std::min(total, begin + chunk_size);
                results[c] = fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return results;
}

constexpr std::uint64_t kChunk = 1024;

struct MemberSpec {
    ProcessSpec spec;
    MarkRule mark;
    double alpha;
};

MemberSpec member_spec(const Preset& preset, int n) {
    // n <= 1 or a non-scalable preset means the unscaled base process with
    // the d_1 = 1 clock (alpha = 1).
    if (!preset.scalable || n <= 1) return {preset.base, preset.base_mark, 1.0};
    const Scaling s = preset.family->scaling(n);
    return {preset.family->member(n), preset.family->mark_rule(n).rescaled(n), s.alpha()};
}

}  // namespace

WindowMarginals collect_window_marginals(const Preset& preset, int n, std::uint64_t paths,
                                         const WindowConfig& cfg, std::uint64_t seed_base) {
    const MemberSpec m = member_spec(preset, n);
    struct Batch {
        std::vector<double> h_plus;
        std::vector<int> h_mark;
        std::vector<double> e_vals;
        std::vector<std::uint8_t> e_cens;
        std::uint64_t complete = 0;
    };
    auto batches = map_chunks<Batch>(paths, kChunk, [&](std::uint64_t b, std::uint64_t e) {
        Batch out;
        out.h_plus.reserve(e - b);
        for (std::uint64_t i = b; i < e; ++i) {
            const std::uint64_t seed = grid_seed(seed_base, static_cast<std::uint64_t>(n), i);
            const WindowObservation obs =
                observe_ladder_window(m.spec, m.mark, m.alpha, cfg, seed);
            if (obs.complete) {
                ++out.complete;
                if (!cfg.stop_at_first_mark) {
                    out.h_plus.push_back(obs.h_plus);
                    out.h_mark.push_back(obs.h_mark);
                }
            }
            if (obs.mark_seen) {
                out.e_vals.push_back(obs.first_mark_local);
                out.e_cens.push_back(0);
            } else {
                out.e_vals.push_back(obs.exposure);
                out.e_cens.push_back(1);
            }
        }
        return out;
    });
    WindowMarginals out;
    out.total = paths;
    const std::string tag = preset.id + " n=" + std::to_string(n);
    out.h_plus.label = "H+(" + std::to_string(cfg.local_budget) + ") " + tag;
    out.h_mark.label = "HM(" + std::to_string(cfg.local_budget) + ") " + tag;
    out.mark_time.label = "e_n " + tag;
    out.h_plus.n_index = out.h_mark.n_index = out.mark_time.n_index = n;
    out.h_plus.seed_lo = out.h_mark.seed_lo = out.mark_time.seed_lo = seed_base;
    for (const auto& batch : batches) {
        out.complete += batch.complete;
        out.h_plus.values.insert(out.h_plus.values.end(), batch.h_plus.begin(),
                                 batch.h_plus.end());
        for (int v : batch.h_mark) out.h_mark.values.push_back(v);
        out.mark_time.values.insert(out.mark_time.values.end(), batch.e_vals.begin(),
                                    batch.e_vals.end());
        out.mark_time.censored.insert(out.mark_time.censored.end(), batch.e_cens.begin(),
                                      batch.e_cens.end());
    }
    return out;
}

PooledPoints collect_window_points(const Preset& preset, int n, std::uint64_t paths,
                                   const WindowConfig& cfg, std::uint64_t seed_base) {
    const MemberSpec m = member_spec(preset, n);
    struct Batch {
        std::vector<double> under, over;
        std::vector<int> marks;
        std::uint64_t complete = 0;
    };
    auto batches = map_chunks<Batch>(paths, kChunk, [&](std::uint64_t b, std::uint64_t e) {
        Batch out;
        for (std::uint64_t i = b; i < e; ++i) {
            const std::uint64_t seed = grid_seed(seed_base, static_cast<std::uint64_t>(n), i);
            Batch local;
            auto sink = [&local](const LadderPoint& p, double) {
                local.under.push_back(p.undershoot);
                local.over.push_back(p.overshoot);
                local.marks.push_back(p.mark);
            };
            const WindowObservation obs =
                observe_ladder_window(m.spec, m.mark, m.alpha, cfg, seed, sink);
            // Incomplete windows are dropped whole to keep the pool unbiased.
            if (obs.complete) {
                ++out.complete;
                out.under.insert(out.under.end(), local.under.begin(), local.under.end());
                out.over.insert(out.over.end(), local.over.begin(), local.over.end());
                out.marks.insert(out.marks.end(), local.marks.begin(), local.marks.end());
            }
        }
        return out;
    });
    PooledPoints out;
    out.total = paths;
    out.pairs.label = preset.id + " ladder points n=" + std::to_string(n);
    out.pairs.n_index = n;
    out.pairs.seed_lo = seed_base;
    for (const auto& batch : batches) {
        out.complete += batch.complete;
        out.pairs.values.insert(out.pairs.values.end(), batch.under.begin(), batch.under.end());
        out.pairs.values2.insert(out.pairs.values2.end(), batch.over.begin(), batch.over.end());
        out.marks.insert(out.marks.end(), batch.marks.begin(), batch.marks.end());
    }
    return out;
}

SampleSet collect_total_local_times(const Preset& preset, std::uint64_t paths, double horizon,
                                    double min_gap, std::uint64_t seed_base) {
    const MemberSpec m = member_spec(preset, 1);
    struct Batch {
        std::vector<double> values;
        std::vector<std::uint8_t> cens;
    };
    auto batches = map_chunks<Batch>(paths, kChunk, [&](std::uint64_t b, std::uint64_t e) {
        Batch out;
        for (std::uint64_t i = b; i < e; ++i) {
            const std::uint64_t seed = grid_seed(seed_base, 1, i);
            const FullLadderObservation obs =
                observe_full_ladder(m.spec, m.mark, m.alpha, horizon, min_gap, seed);
            out.values.push_back(obs.total_local_time);
            out.cens.push_back(obs.complete ? 0 : 1);
        }
        return out;
    });
    SampleSet out;
    out.label = preset.id + " total local time";
    out.n_index = 1;
    out.seed_lo = seed_base;
    for (const auto& batch : batches) {
        out.values.insert(out.values.end(), batch.values.begin(), batch.values.end());
        out.censored.insert(out.censored.end(), batch.cens.begin(), batch.cens.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// analytic table
// ---------------------------------------------------------------------------

namespace {

AnalyticRow analytic_row(const Preset& preset, int n, const Tolerances& tol) {
    const MemberSpec m = member_spec(preset, n);
    AnalyticRow row;
    row.n = n;
    row.psi_at_1 = laplace_exponent(m.spec, 1.0, tol);
    row.eta = eta_root(m.spec, tol);
    row.phi_at_1 = phi_inverse(m.spec, 1.0, tol);
    row.alpha = m.alpha;
    row.kill = kill_rate(m.spec);
    const LadderMeasure mu(m.spec, m.mark, row.eta, row.kill, tol.ladder_quad_rel);
    row.mu_plus_mass = mu.mu_plus_mass();
    row.lambda_n = mu.lambda_rate();
    return row;
}

// ---------------------------------------------------------------------------
// verify / converge rows
// ---------------------------------------------------------------------------

DistanceReport make_row(std::string label, std::string metric, int n, double value,
                        double threshold, std::size_t size, std::uint64_t seed) {
    DistanceReport r;
    r.label = std::move(label);
    r.metric = std::move(metric);
    r.n_index = n;
    r.value = value;
    r.threshold = threshold;
    r.pass = value <= threshold;
    r.sample_size = size;
    r.seed_base = seed;
    return r;
}

std::vector<DistanceReport> verify_rows(const ExperimentConfig& config) {
    const Preset& preset = find_preset(config.preset);
    const Tolerances tol = config.tolerances();
    const Thresholds th = config.thresholds();
    const int n = preset.scalable ? config.n_grid.front() : 1;
    const MemberSpec m = member_spec(preset, n);
    std::vector<DistanceReport> rows;

    // psi(phi(a)) = a on a log grid.
    double worst = 0.0;
    for (double a = 1e-3; a <= 1e3 + 1e-9; a *= 10.0) {
        const double phi = phi_inverse(m.spec, a, tol);
        worst = std::max(worst,
                         std::abs(laplace_exponent(m.spec, phi, tol) - a) / std::max(1.0, a));
    }
    rows.push_back(make_row("psi(phi(a))=a", "identity", n, worst, 1e-9, 7, config.seed_base));

    // psi(eta) = 0.
    const double eta = eta_root(m.spec, tol);
    rows.push_back(make_row("psi(eta)=0", "identity", n,
                            std::abs(laplace_exponent(m.spec, eta, tol)), 1e-9, 1,
                            config.seed_base));

    if (m.spec.levy.has_finite_mass()) {
        // W on a dense grid; W(0) = -1/d' exactly, and the renewal-equation
        // residual (relative, since supercritical W grows exponentially)
        // stays below 1e-6 at the checkpoints.
        const double step = 1e-3;
        std::vector<double> grid;
        for (int i = 0; i <= 10000; ++i) grid.push_back(i * step);
        const auto w = scale_function(m.spec, grid, tol);
        rows.push_back(make_row("W(0)=-1/d'", "identity", n,
                                std::abs(w[0] - (-1.0 / m.spec.drift)), 0.0, 1,
                                config.seed_base));
        auto w_at = [&](double x) {
            const std::size_t j =
                std::min(static_cast<std::size_t>(x / step), grid.size() - 2);
            const double frac = x / step - j;
            return w[j] + frac * (w[j + 1] - w[j]);
        };
        double resid = 0.0;
        const double w0 = -1.0 / m.spec.drift;
        for (int i = 1; i <= 40; ++i) {
            const double x = 0.25 * i;
            auto f = [&](double u) { return w_at(x - u) * m.spec.levy.tail(u); };
            const double rhs = w0 * (1.0 + integrate(f, 0.0, x, 1e-9));
            resid = std::max(resid, std::abs(w_at(x) - rhs) / std::max(1.0, w_at(x)));
        }
        rows.push_back(
            make_row("Volterra residual", "identity", n, resid, 1e-6, 40, config.seed_base));

        // Laplace check: ∫_0^M e^{-λx} W(x) dx vs 1/psi(λ) at λ = 2 phi(1).
        const double lambda = 2.0 * phi_inverse(m.spec, 1.0, tol);
        double big = 1.0;
        while (std::exp((eta - lambda) * big) >= 1e-4) big += 1.0;
        std::vector<double> fine_grid;
        const int fine_steps = 2000;
        for (int i = 0; i <= fine_steps; ++i) fine_grid.push_back(big * i / fine_steps);
        const auto wf = scale_function(m.spec, fine_grid, tol);
        double lap = 0.0;
        for (int i = 0; i < fine_steps; ++i) {
            const double x0 = fine_grid[i], x1 = fine_grid[i + 1];
            lap += 0.5 * (std::exp(-lambda * x0) * wf[i] + std::exp(-lambda * x1) * wf[i + 1]) *
                   (x1 - x0);
        }
        const double target = 1.0 / laplace_exponent(m.spec, lambda, tol);
        rows.push_back(make_row("Laplace(W)=1/psi", "identity", n,
                                std::abs(lap - target) / target, 0.02, fine_steps,
                                config.seed_base));
    }

    // Rescaling identities: drift and W(0) of the rescaled member.
    if (preset.scalable && preset.family) {
        const Scaling s = preset.family->scaling(n);
        const ProcessSpec resc = preset.family->member(n);
        const double drift_gap = std::abs(resc.drift - (-s.d_n / s.n));
        rows.push_back(
            make_row("rescaled drift = -d_n/n", "identity", n, drift_gap, 0.0, 1,
                     config.seed_base));
        const double w0_gap = std::abs(-1.0 / resc.drift - s.n / s.d_n);
        rows.push_back(make_row("W_n(0) = n/d_n", "identity", n, w0_gap, 0.0, 1,
                                config.seed_base));
    }

    // Ladder-law checks against the analytic ladder measure.
    const double kill = kill_rate(m.spec);
    if (kill == 0.0 && psi_prime_at_zero(m.spec) == 0.0) {
        // Critical member: pooled window points against mu.
        auto mu = std::make_shared<LadderMeasure>(m.spec, m.mark, eta, kill,
                                                  tol.ladder_quad_rel);
        WindowConfig wcfg;
        wcfg.local_budget = 4.0 / m.alpha;  // about four ladder points per window
        wcfg.path_cap = config.horizon;
        const PooledPoints pool = collect_window_points(
            preset, n, std::min<std::uint64_t>(config.paths_per_n, 20000), wcfg,
            config.seed_base);
        if (pool.pairs.values.size() >= 1000) {
            SampleSet overshoots;
            overshoots.label = pool.pairs.label + " overshoots";
            overshoots.n_index = n;
            overshoots.values = pool.pairs.values2;
            overshoots.seed_lo = config.seed_base;
            rows.push_back(distribution_distance(
                overshoots, AnalyticLaw::ladder_normalized(mu), Metric::ks, th));
            const auto chi = chi_square_2d(pool.pairs, *mu, 4, 4, th.chi2_p_min);
            // value = 1 - p so that pass keeps the value <= threshold shape.
            rows.push_back(make_row("(undershoot,overshoot) vs intensity", "chi2", n,
                                    1.0 - chi.p_value, 1.0 - th.chi2_p_min,
                                    pool.pairs.values.size(), config.seed_base));
        }
        // Mark-time law when marks are active.
        const LadderMeasure& mur = *mu;
        if (mur.lambda_rate() > 0.0 && !m.mark.is_zero()) {
            WindowConfig ecfg;
            ecfg.local_budget = 4.0 / std::max(mur.lambda_rate(), 1e-9);
            ecfg.path_cap = config.horizon;
            ecfg.stop_at_first_mark = true;
            const WindowMarginals wm = collect_window_marginals(
                preset, n, config.paths_per_n, ecfg, config.seed_base ^ 0x5u);
            try {
                const RateTestReport rt =
                    exponential_rate_test(wm.mark_time, mur.lambda_rate(), th);
                auto row = make_row("e_n exponential rate", "rate", n,
                                    std::abs(rt.rate_mle - mur.lambda_rate()) /
                                        mur.lambda_rate(),
                                    th.rate_rel_tol, rt.uncensored, config.seed_base);
                rows.push_back(row);
            } catch (const Error& err) {
                if (err.kind() != ErrorKind::precision) throw;
            }
        }
    } else if (kill > 0.0) {
        // Subcritical member: total local time is Exp(kill).
        const SampleSet lt = collect_total_local_times(
            preset, config.paths_per_n, config.horizon,
            /*min_gap=*/20.0, config.seed_base);
        const RateTestReport rt = exponential_rate_test(lt, kill, th);
        rows.push_back(make_row("L(inf) exponential rate", "rate", 1,
                                std::abs(rt.rate_mle - kill) / kill, th.rate_rel_tol,
                                rt.uncensored, config.seed_base));
        auto ks_row = make_row("L(inf) KS vs Exp(kill)", "KS", 1, rt.ks, rt.ks_threshold,
                               rt.uncensored, config.seed_base);
        rows.push_back(ks_row);
    }
    return rows;
}

struct PerNResult {
    AnalyticRow analytic;
    std::vector<DistanceReport> rows;
};

PerNResult converge_one_n(const ExperimentConfig& config, const Preset& preset,
                          const LimitSpec& limit, int n) {
    const Tolerances tol = config.tolerances();
    const Thresholds th = config.thresholds();
    PerNResult result;
    result.analytic = analytic_row(preset, n, tol);

    WindowConfig wcfg;
    wcfg.local_budget = 1.0;
    wcfg.path_cap = config.horizon;
    const WindowMarginals wm =
        collect_window_marginals(preset, n, config.paths_per_n, wcfg, config.seed_base);

    const std::size_t complete = wm.h_plus.values.size();
    if (complete == 0) {
        // Degenerate drift-only members never record; H(1) = (0,0) exactly.
        result.rows.push_back(make_row(preset.id + " H+(1) vs limit", "W1", n, 0.0,
                                       th.tv_threshold, 0, config.seed_base));
        return result;
    }

    // H+(1): mean against the analytic first moment (exact at every n), and
    // W1 distance to the limit point mass (the supported limits have a pure
    // drift H+, so H+(1) is the point b^2/2).
    const MemberSpec member = member_spec(preset, n);
    const double analytic_mean =
        result.analytic.mu_plus_mass == 0.0
            ? 0.0
            : LadderMeasure(member.spec, member.mark, result.analytic.eta,
                            result.analytic.kill, tol.ladder_quad_rel)
                  .moment(1);
    double mean = 0.0, sq = 0.0;
    for (double v : wm.h_plus.values) {
        mean += v;
        sq += v * v;
    }
    mean /= complete;
    sq = std::max(0.0, sq / complete - mean * mean);
    const double se = std::sqrt(sq / complete);
    result.rows.push_back(make_row(preset.id + " mean H+(1)", "mean", n,
                                   std::abs(mean - analytic_mean),
                                   th.mean_sigmas * std::max(se, 1e-300), complete,
                                   config.seed_base));
    const double limit_point = 0.5 * limit.b2;
    auto w1 = distribution_distance(wm.h_plus, AnalyticLaw::point_mass(limit_point),
                                    Metric::wasserstein1, th);
    w1.label = preset.id + " H+(1) vs point mass";
    result.rows.push_back(w1);

    // HM(1) against the limit Poisson rate (theta or rho).
    const double limit_rate =
        preset.family->assumption == Assumption::B1 ? limit.theta : limit.rho;
    if (limit_rate > 0.0) {
        auto tv = distribution_distance(wm.h_mark, AnalyticLaw::poisson(limit_rate),
                                        Metric::tv_integers, th);
        tv.label = preset.id + " HM(1) vs Poisson";
        result.rows.push_back(tv);
    }

    // Mark-time exponential rate at this n (stop-at-first-mark windows).
    if (result.analytic.lambda_n > 0.0) {
        WindowConfig ecfg;
        ecfg.local_budget = 4.0 / result.analytic.lambda_n;
        ecfg.path_cap = config.horizon;
        ecfg.stop_at_first_mark = true;
        const WindowMarginals em = collect_window_marginals(preset, n, config.paths_per_n,
                                                            ecfg, config.seed_base ^ 0x5u);
        try {
            const RateTestReport rt =
                exponential_rate_test(em.mark_time, result.analytic.lambda_n, th);
            result.rows.push_back(make_row(
                preset.id + " e_n rate", "rate", n,
                std::abs(rt.rate_mle - result.analytic.lambda_n) / result.analytic.lambda_n,
                th.rate_rel_tol, rt.uncensored, config.seed_base));
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::precision) throw;
        }
    }
    return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// bundle assembly
// ---------------------------------------------------------------------------

ReportBundle run_experiment(const ExperimentConfig& config, RunMode mode) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    const Preset& preset = find_preset(config.preset);
    const Tolerances tol = config.tolerances();
    const Thresholds th = config.thresholds();

    ReportBundle bundle;
    bundle.config = config;
    bundle.runtime.threads = worker_count();

    if (preset.scalable && preset.family) {
        bundle.limit = limit_parameters(*preset.family);
        bundle.has_limit = true;
    }
    if (mode == RunMode::converge && !preset.scalable)
        throw usage_error("preset '" + preset.id +
                          "' has no scaling family; use the verify subcommand");

    const bool converge_active =
        (mode == RunMode::converge || mode == RunMode::all) && preset.scalable;

    // Analytic table for every n in the grid (or the base process); converge
    // runs fill it from their per-n results instead.
    const std::vector<int> grid = preset.scalable ? config.n_grid : std::vector<int>{1};
    if (!converge_active) {
        for (int n : grid) bundle.analytic.push_back(analytic_row(preset, n, tol));
    }

    if (mode == RunMode::verify || mode == RunMode::all) {
        auto rows = verify_rows(config);
        bundle.distances.insert(bundle.distances.end(), rows.begin(), rows.end());
    }

    if (converge_active) {
        fs::create_directories(config.output_dir);
        std::vector<PerNResult> per_n;
        for (int n : config.n_grid) {
            const fs::path partial =
                fs::path(config.output_dir) /
                ("partial_" + config.preset + "_n" + std::to_string(n) + ".json");
            const std::uint64_t want_hash = config.per_n_config_hash(n);
            bool loaded = false;
            if (fs::exists(partial)) {
                try {
                    std::ifstream in(partial);
                    ordered_json j = ordered_json::parse(in);
                    if (j.at("config_hash").get<std::uint64_t>() == want_hash) {
                        PerNResult r;
                        const auto& a = j.at("analytic");
                        r.analytic = {n,
                                      a.at("psi_at_1").get<double>(),
                                      a.at("eta").get<double>(),
                                      a.at("phi_at_1").get<double>(),
                                      a.at("mu_plus_mass").get<double>(),
                                      a.at("lambda_n").get<double>(),
                                      a.at("kill").get<double>(),
                                      a.at("alpha").get<double>()};
                        for (const auto& row : j.at("rows")) {
                            DistanceReport d;
                            d.label = row.at("label").get<std::string>();
                            d.metric = row.at("metric").get<std::string>();
                            d.n_index = row.at("n").get<int>();
                            d.value = row.at("value").get<double>();
                            d.threshold = row.at("threshold").get<double>();
                            d.pass = row.at("pass").get<bool>();
                            d.sample_size = row.at("N").get<std::size_t>();
                            d.seed_base = row.at("seed_base").get<std::uint64_t>();
                            r.rows.push_back(std::move(d));
                        }
                        per_n.push_back(std::move(r));
                        loaded = true;
                    }
                } catch (const std::exception&) {
                    loaded = false;  // unreadable partials are recomputed
                }
            }
            if (!loaded) {
                PerNResult r = converge_one_n(config, preset, bundle.limit, n);
                ordered_json j;
                j["config_hash"] = want_hash;
                j["analytic"] = {{"psi_at_1", r.analytic.psi_at_1},
                                 {"eta", r.analytic.eta},
                                 {"phi_at_1", r.analytic.phi_at_1},
                                 {"mu_plus_mass", r.analytic.mu_plus_mass},
                                 {"lambda_n", r.analytic.lambda_n},
                                 {"kill", r.analytic.kill},
                                 {"alpha", r.analytic.alpha}};
                j["rows"] = ordered_json::array();
                for (const auto& d : r.rows)
                    j["rows"].push_back({{"label", d.label},
                                         {"metric", d.metric},
                                         {"n", d.n_index},
                                         {"value", d.value},
                                         {"threshold", d.threshold},
                                         {"pass", d.pass},
                                         {"N", d.sample_size},
                                         {"seed_base", d.seed_base}});
                std::ofstream out(partial);
                out << j.dump(2) << "\n";
                per_n.push_back(std::move(r));
            }
        }
        for (const auto& r : per_n) {
            bundle.analytic.push_back(r.analytic);
            bundle.distances.insert(bundle.distances.end(), r.rows.begin(), r.rows.end());
        }

        // Endpoint trend verdicts per tracked marginal.
        if (per_n.size() >= 2) {
            auto find_metric = [&](const PerNResult& r,
                                   const std::string& metric) -> const DistanceReport* {
                for (const auto& d : r.rows)
                    if (d.metric == metric) return &d;
                return nullptr;
            };
            for (const char* metric_name : {"TV", "W1"}) {
                const std::string metric = metric_name;
                const auto* first = find_metric(per_n.front(), metric);
                const auto* last = find_metric(per_n.back(), metric);
                if (!first || !last) continue;
                double floor = 0.0;
                if (metric == "TV") {
                    const double rate = preset.family->assumption == Assumption::B1
                                            ? bundle.limit.theta
                                            : bundle.limit.rho;
                    std::vector<double> pmf;
                    for (int k = 0; k < 40; ++k) pmf.push_back(poisson_pmf(k, rate));
                    floor = th.trend_noise_factor *
                            tv_sampling_mean(pmf, std::max<std::size_t>(last->sample_size, 1));
                } else {
                    floor = th.trend_noise_factor * 1e-12;
                }
                auto row = make_row(preset.id + " " + metric + " trend n=" +
                                        std::to_string(per_n.front().analytic.n) + "->" +
                                        std::to_string(per_n.back().analytic.n),
                                    "trend", per_n.back().analytic.n, last->value,
                                    std::max(first->value, floor), last->sample_size,
                                    config.seed_base);
                row.pass = trend_converged(first->value, last->value, floor);
                bundle.distances.push_back(row);
            }
        }

        // Prop 2.2 condition gaps over the grid.
        const auto js = js_condition_check(*preset.family, config.n_grid, bundle.limit, tol);
        for (const auto& row : js.rows) {
            bundle.distances.push_back(make_row(preset.id + " js c_n gap", "js", row.n_index,
                                                row.c_gap, 0.1, 1, config.seed_base));
            bundle.distances.push_back(make_row(preset.id + " js h2 gap", "js", row.n_index,
                                                row.h2_gap, 0.1, 1, config.seed_base));
        }
        auto js_row = make_row(preset.id + " js trend", "trend", config.n_grid.back(),
                               js.rows.back().h2_gap, js.rows.front().h2_gap + 1e-12, 1,
                               config.seed_base);
        js_row.pass = js.trend_ok;
        bundle.distances.push_back(js_row);
    }

    bool all_pass = true;
    for (const auto& d : bundle.distances) all_pass = all_pass && d.pass;
    bundle.verdict = bundle.distances.empty() && bundle.analytic.empty()
                         ? "no-op"
                         : (all_pass ? "pass" : "fail");
    bundle.runtime.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return bundle;
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string analytic_csv(const std::vector<AnalyticRow>& rows) {
    std::string out = "n,psi_at_1,eta,phi_at_1,mu_plus_mass,lambda_n,kill,alpha\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + "," + fmt17(r.psi_at_1) + "," + fmt17(r.eta) + "," +
               fmt17(r.phi_at_1) + "," + fmt17(r.mu_plus_mass) + "," + fmt17(r.lambda_n) +
               "," + fmt17(r.kill) + "," + fmt17(r.alpha) + "\n";
    }
    return out;
}

std::string distances_csv(const std::vector<DistanceReport>& rows) {
    std::string out = "metric,label,n,value,threshold,pass,N,seed_base\n";
    for (const auto& r : rows) {
        out += r.metric + ",\"" + r.label + "\"," + std::to_string(r.n_index) + "," +
               fmt17(r.value) + "," + fmt17(r.threshold) + "," + (r.pass ? "true" : "false") +
               "," + std::to_string(r.sample_size) + "," + std::to_string(r.seed_base) + "\n";
    }
    return out;
}

std::string bundle_summary_json(const ReportBundle& bundle) {
    ordered_json j;
    j["preset"] = bundle.config.preset;
    j["n_grid"] = bundle.config.n_grid;
    j["paths_per_n"] = bundle.config.paths_per_n;
    j["horizon"] = bundle.config.horizon;
    j["seed_base"] = bundle.config.seed_base;
    j["rng"] = bundle.runtime.rng;
    if (bundle.has_limit) {
        j["limit"] = {{"b2", bundle.limit.b2},       {"eta", bundle.limit.eta},
                      {"theta", bundle.limit.theta}, {"kappa", bundle.limit.kappa_slope},
                      {"rho", bundle.limit.rho},     {"kill", bundle.limit.kill}};
    }
    j["analytic"] = ordered_json::array();
    for (const auto& r : bundle.analytic)
        j["analytic"].push_back({{"n", r.n},
                                 {"psi_at_1", r.psi_at_1},
                                 {"eta", r.eta},
                                 {"phi_at_1", r.phi_at_1},
                                 {"mu_plus_mass", r.mu_plus_mass},
                                 {"lambda_n", r.lambda_n},
                                 {"kill", r.kill},
                                 {"alpha", r.alpha}});
    j["distances"] = ordered_json::array();
    for (const auto& d : bundle.distances)
        j["distances"].push_back({{"metric", d.metric},
                                  {"label", d.label},
                                  {"n", d.n_index},
                                  {"value", d.value},
                                  {"threshold", d.threshold},
                                  {"pass", d.pass},
                                  {"N", d.sample_size},
                                  {"seed_base", d.seed_base}});
    if (!bundle.errors.empty()) j["errors"] = bundle.errors;
    j["verdict"] = bundle.verdict;
    j["runtime"] = {{"wall_ms", bundle.runtime.wall_ms}, {"threads", bundle.runtime.threads}};
    return j.dump(2) + "\n";
}

int emit_outputs(const ReportBundle& bundle) {
    fs::create_directories(bundle.config.output_dir);
    const fs::path dir(bundle.config.output_dir);
    if (bundle.config.emit_csv) {
        {
            std::ofstream out(dir / "analytic_params.csv", std::ios::binary);
            if (!out) throw Error(ErrorKind::usage, "cannot write analytic_params.csv");
            out << analytic_csv(bundle.analytic);
        }
        {
            std::ofstream out(dir / "distances.csv", std::ios::binary);
            if (!out) throw Error(ErrorKind::usage, "cannot write distances.csv");
            out << distances_csv(bundle.distances);
        }
    }
    if (bundle.config.emit_json) {
        std::ofstream out(dir / "summary.json", std::ios::binary);
        if (!out) throw Error(ErrorKind::usage, "cannot write summary.json");
        out << bundle_summary_json(bundle);
    }
    return bundle.verdict == "fail" ? 1 : 0;
}

}  // namespace fluctlab
