#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fluctlab/ladder_decomposition.hpp"
#include "fluctlab/levy_calculus.hpp"

namespace fluctlab {

struct SampleSet {
    std::string label;
    std::vector<double> values;
    std::vector<double> values2;        // second coordinate when bivariate
    std::vector<std::uint8_t> censored; // aligned with values when present
    int n_index = 1;
    std::uint64_t seed_lo = 0;
    std::uint64_t seed_hi = 0;

    bool bivariate() const { return !values2.empty(); }
};

struct DistanceReport {
    std::string label;
    std::string metric;  // "KS", "W1", "TV", "laplace-gap", "rate", "chi2", "mean", "js"
    int n_index = 1;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;  // value <= threshold
    std::size_t sample_size = 0;
    std::uint64_t seed_base = 0;
};

// Comparator thresholds; module constants, overridable via configuration.
struct Thresholds {
    double ks_coefficient = 1.63;  // asymptotic 1% level: D <= coeff / sqrt(N)
    double tv_threshold = 0.02;    // reference level at N = 1e5
    double chi2_p_min = 0.01;
    double rate_rel_tol = 0.05;
    double mean_sigmas = 3.0;
    double laplace_sigmas = 3.0;
    // Trend verdicts compare endpoints; a final distance at or below the
    // estimator's own noise floor counts as converged even if not strictly
    // below the first distance (exact prelimits would otherwise flicker).
    double trend_noise_factor = 2.0;
};

inline const Thresholds& default_thresholds() {
    static const Thresholds t{};
    return t;
}

enum class Metric { ks, wasserstein1, tv_integers, laplace_grid };

struct AnalyticLaw {
    enum class Kind { exponential, poisson, point_mass, ladder_normalized };
    Kind kind;
    double param = 0.0;  // rate, or the point-mass location
    std::shared_ptr<const LadderMeasure> ladder;

    static AnalyticLaw exponential(double rate);
    static AnalyticLaw poisson(double rate);
    static AnalyticLaw point_mass(double location);
    static AnalyticLaw ladder_normalized(std::shared_ptr<const LadderMeasure> m);
};

// --- comparators -----------------------------------------------------------

struct LaplacePoint {
    double estimate;
    double standard_error;  // bootstrap, 200 resamples on a seeded stream
};

LaplacePoint empirical_laplace(const SampleSet& samples, double beta, double gamma,
                               std::uint64_t bootstrap_seed = 0x1234ABCD5678EF90ULL,
                               int resamples = 200);

DistanceReport distribution_distance(const SampleSet& a, const SampleSet& b, Metric metric,
                                     const Thresholds& th = default_thresholds());
DistanceReport distribution_distance(const SampleSet& a, const AnalyticLaw& law, Metric metric,
                                     const Thresholds& th = default_thresholds());

// Laplace-grid-max-gap: worst |empirical - analytic| Laplace transform value
// over a (beta, gamma) grid, in units of laplace_sigmas bootstrap standard
// errors (pass iff every grid point is within that band, value <= 1).
DistanceReport laplace_grid_distance(const SampleSet& bivariate,
                                     const std::function<double(double, double)>& exponent,
                                     const std::vector<double>& betas,
                                     const std::vector<double>& gammas,
                                     const Thresholds& th = default_thresholds());

// Kolmogorov-Smirnov statistic of `values` against a cdf.
double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf);
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);

// Censoring-aware exponential fit: MLE rate = #uncensored / sum(values)
// (censored entries contribute their exposure), compared to the analytic
// rate; pass iff the gap is within `sigmas` MLE standard errors and the KS
// test of the uncensored values against Exp(rate) passes.
struct RateTestReport {
    double rate_mle = 0.0;
    double standard_error = 0.0;
    double ks = 0.0;
    double ks_threshold = 0.0;
    std::size_t uncensored = 0;
    bool rate_ok = false;
    bool ks_ok = false;
    bool pass = false;
};

RateTestReport exponential_rate_test(const SampleSet& samples, double rate,
                                     const Thresholds& th = default_thresholds(),
                                     double sigmas = 3.0);

// Two-dimensional binned chi-square of (undershoot, overshoot) pairs against
// the normalized ladder intensity e^{-eta x} dx Λ(x + dy). Cells come from
// the analytic marginal quantiles.
struct ChiSquareReport {
    double statistic = 0.0;
    int df = 0;
    double p_value = 0.0;
    bool pass = false;
};

ChiSquareReport chi_square_2d(const SampleSet& pairs, const LadderMeasure& mu, int bins_x,
                              int bins_y, double p_min);

// Expected total-variation distance between the empirical pmf of N draws from
// `pmf` and `pmf` itself (first-order: sum_k sqrt(2 p q / (pi N))).
double tv_sampling_mean(const std::vector<double>& pmf, std::size_t n);

// Endpoint trend rule (see Thresholds::trend_noise_factor).
bool trend_converged(double first, double last, double noise_floor);

// --- Prop 2.2 condition checker --------------------------------------------

struct JsConditionReport {
    int n_index;
    double c_gap;       // |c_n - c|, h(u) = 1 ∧ u
    double h2_gap;      // |∫h^2 dΛ_n~ - (b^2 + ∫h^2 dΛ)|
    std::vector<double> g_gaps;  // test bank of bounded g vanishing near 0
};

struct JsConditionVerdict {
    std::vector<JsConditionReport> rows;
    bool trend_ok;  // every gap non-increasing endpoint-to-endpoint
};

JsConditionVerdict js_condition_check(const ProcessFamily& family,
                                      const std::vector<int>& n_grid, const LimitSpec& limit,
                                      const Tolerances& tol = default_tolerances());

// --- windowed ladder observation -------------------------------------------
//
// Critical paths accumulate local time with heavy-tailed waiting times, so
// marginals of H(t) are observed through a fixed local-time window [0,budget]
// with a hard path-time cap: the window is complete when the clock crosses
// the budget before the cap. Only the clock (independent of the path) decides
// how many ladder points fall inside the window, which keeps the observed
// marginals unbiased; the cap is chosen so incompleteness is rare.

struct WindowConfig {
    double local_budget = 1.0;
    double path_cap = 1e5;
    bool stop_at_first_mark = false;
};

struct WindowObservation {
    bool complete = false;
    double h_plus = 0.0;
    int h_mark = 0;
    std::size_t points = 0;
    double crossing_time = 0.0;  // L^{-1}(budget), complete runs only
    bool mark_seen = false;
    double first_mark_local = 0.0;
    double exposure = 0.0;  // local time over which marks were observed
};

// Optional per-point sink for pooling (undershoot, overshoot, mark) triples.
using PointSink = std::function<void(const LadderPoint&, double local_time)>;

WindowObservation observe_ladder_window(const ProcessSpec& spec, const MarkRule& mark,
                                        double alpha, const WindowConfig& cfg,
                                        std::uint64_t seed, const PointSink& sink = nullptr);

// Full-ladder observation for killed/subcritical processes: simulate to the
// horizon, declare the ladder complete when the end gap (supremum - value)
// is at least `min_gap`, and report the total local time sum_{i<=l} tau_i.
struct FullLadderObservation {
    double total_local_time = 0.0;
    bool complete = false;
    std::size_t records = 0;
    double end_gap = 0.0;
};

FullLadderObservation observe_full_ladder(const ProcessSpec& spec, const MarkRule& mark,
                                          double alpha, double horizon, double min_gap,
                                          std::uint64_t seed);

}  // namespace fluctlab
