#include <doctest.h>

#include <cmath>
#include <memory>

#include "fluctlab/convergence_lab.hpp"
#include "fluctlab/errors.hpp"
#include "fluctlab/presets.hpp"

using namespace fluctlab;

namespace {

SampleSet exp_samples(double rate, int n, std::uint64_t seed) {
    SampleSet s;
    s.label = "exp draws";
    SplitMix64 rng(seed);
    for (int i = 0; i < n; ++i) s.values.push_back(rng.next_exponential(rate));
    return s;
}

}  // namespace

TEST_CASE("empirical laplace") {
    SampleSet zeros;
    zeros.label = "zeros";
    zeros.values.assign(1000, 0.0);
    const auto at0 = empirical_laplace(zeros, 0.0, 0.0);
    CHECK(at0.estimate == 1.0);
    CHECK(at0.standard_error == 0.0);
    const auto z = empirical_laplace(zeros, 2.0, 0.0);
    CHECK(z.estimate == 1.0);
    CHECK(z.standard_error == 0.0);

    const auto exp1 = exp_samples(1.0, 100000, 42);
    const auto lp = empirical_laplace(exp1, 1.0, 0.0);
    CHECK(std::abs(lp.estimate - 0.5) <= 3.0 * lp.standard_error);
    // Bootstrap s.e. tracks the iid s.e. sd/sqrt(N).
    CHECK(lp.standard_error == doctest::Approx(std::sqrt(1.0 / 12.0 / 1e5)).epsilon(0.25));
}

TEST_CASE("ks statistic") {
    const auto exp1 = exp_samples(1.0, 100000, 7);
    const auto rep = distribution_distance(exp1, AnalyticLaw::exponential(1.0), Metric::ks);
    CHECK(rep.value < 0.01);
    CHECK(rep.pass);
    // KS of a sample against itself (two-sample) is zero.
    CHECK(ks_statistic_two_sample(exp1.values, exp1.values) == 0.0);
    // Wrong rate is detected.
    const auto bad = distribution_distance(exp1, AnalyticLaw::exponential(1.3), Metric::ks);
    CHECK(!bad.pass);
}

TEST_CASE("wasserstein distance") {
    SampleSet a = exp_samples(1.0, 50000, 1);
    SampleSet b = exp_samples(1.0, 50000, 2);
    const auto self = distribution_distance(a, a, Metric::wasserstein1);
    CHECK(self.value == 0.0);
    // Scale correctness, exact on the sorted-sample formula.
    const double d = distribution_distance(a, b, Metric::wasserstein1).value;
    SampleSet a3 = a, b3 = b;
    for (auto& v : a3.values) v *= 3.0;
    for (auto& v : b3.values) v *= 3.0;
    const double d3 = distribution_distance(a3, b3, Metric::wasserstein1).value;
    CHECK(d3 == doctest::Approx(3.0 * d).epsilon(1e-12));
    // Against a point mass.
    SampleSet ones;
    ones.label = "ones";
    ones.values.assign(100, 1.0);
    CHECK(distribution_distance(ones, AnalyticLaw::point_mass(1.0), Metric::wasserstein1)
              .value == 0.0);
}

TEST_CASE("tv on integers against a poisson law") {
    SplitMix64 rng(12);
    SampleSet counts;
    counts.label = "poisson 2 draws";
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        // Draw Poisson(2) via exponential gaps.
        int k = 0;
        for (double acc = rng.next_exponential(1.0); acc <= 2.0;
             acc += rng.next_exponential(1.0))
            ++k;
        counts.values.push_back(k);
    }
    const auto rep = distribution_distance(counts, AnalyticLaw::poisson(2.0),
                                           Metric::tv_integers);
    CHECK(rep.value < 0.02);
    CHECK(rep.pass);
    // Metric/law mismatch is a usage error.
    CHECK_THROWS_AS(
        (void)distribution_distance(counts, AnalyticLaw::poisson(2.0), Metric::ks), Error);
}

TEST_CASE("exponential rate test") {
    SUBCASE("clean draws pass") {
        SampleSet s = exp_samples(2.0, 100000, 5);
        const auto rep = exponential_rate_test(s, 2.0);
        CHECK(rep.pass);
        CHECK(std::abs(rep.rate_mle - 2.0) < 0.05 * 2.0);
    }
    SUBCASE("censoring correction keeps the estimate unbiased") {
        SplitMix64 rng(6);
        SampleSet s;
        s.label = "censored exp";
        const double cap = 0.6;
        for (int i = 0; i < 100000; ++i) {
            const double e = rng.next_exponential(2.0);
            if (e <= cap) {
                s.values.push_back(e);
                s.censored.push_back(0);
            } else {
                s.values.push_back(cap);
                s.censored.push_back(1);
            }
        }
        const auto rep = exponential_rate_test(s, 2.0);
        CHECK(rep.rate_ok);
    }
    SUBCASE("all censored is a precision failure") {
        SampleSet s;
        s.label = "all censored";
        s.values.assign(5000, 1.0);
        s.censored.assign(5000, 1);
        CHECK_THROWS_AS((void)exponential_rate_test(s, 1.0), Error);
    }
}

TEST_CASE("chi square 2d against the ladder intensity") {
    ProcessSpec spec;
    spec.drift = -1.0;
    spec.levy = LevyMeasure::exponential(1.0, 1.0);
    const auto mu = ladder_measure(spec, MarkRule::constant(1.0));
    // Under the critical exponential intensity e^{-x} e^{-y}, undershoot and
    // overshoot are independent Exp(1).
    SplitMix64 rng(77);
    SampleSet pairs;
    pairs.label = "synthetic";
    for (int i = 0; i < 50000; ++i) {
        pairs.values.push_back(rng.next_exponential(1.0));
        pairs.values2.push_back(rng.next_exponential(1.0));
    }
    const auto rep = chi_square_2d(pairs, mu, 4, 4, 0.01);
    CHECK(rep.pass);
    // A wrong joint law fails: swap overshoot for a heavier tail.
    SampleSet bad = pairs;
    for (auto& v : bad.values2) v *= 1.25;
    CHECK(!chi_square_2d(bad, mu, 4, 4, 0.01).pass);
}

TEST_CASE("trend rule") {
    CHECK(trend_converged(0.3, 0.1, 0.0));
    CHECK(!trend_converged(0.1, 0.3, 0.0));
    CHECK(trend_converged(0.0, 0.0, 1e-3));  // exact prelimit: equal distances
    CHECK(trend_converged(0.01, 0.012, 0.02));  // both at the noise floor
    const double floor = 2.0 * tv_sampling_mean({0.5, 0.5}, 10000);
    CHECK(floor == doctest::Approx(2.0 * std::sqrt(2.0 * 0.25 / (M_PI * 1e4))).epsilon(1e-12));
}

TEST_CASE("js condition check on the registered families") {
    const Preset& preset = find_preset("crit-exp-B2-cap");
    const LimitSpec limit = limit_parameters(*preset.family);
    const auto verdict = js_condition_check(*preset.family, {4, 16, 64}, limit);
    REQUIRE(verdict.rows.size() == 3);
    // ∫(1∧u)^2 dΛ_n~ = 2 - e^{-n}(2n+2): gaps shrink fast.
    CHECK(verdict.rows[0].h2_gap ==
          doctest::Approx(std::exp(-4.0) * 10.0).epsilon(1e-6));
    CHECK(verdict.rows[2].h2_gap < 0.1);
    CHECK(verdict.rows[2].h2_gap < verdict.rows[0].h2_gap);
    CHECK(verdict.trend_ok);
    // c_n = n e^{-n}.
    CHECK(verdict.rows[0].c_gap == doctest::Approx(4.0 * std::exp(-4.0)).epsilon(1e-6));

    // Constant (drift-only) family: all gaps identically zero.
    const Preset& degenerate = find_preset("drift-only");
    const auto dv = js_condition_check(*degenerate.family,
                                       {4, 16, 64}, limit_parameters(*degenerate.family));
    for (const auto& row : dv.rows) {
        CHECK(row.c_gap == doctest::Approx(0.0));
        CHECK(row.h2_gap == doctest::Approx(0.0));
    }
    CHECK(dv.trend_ok);
}

TEST_CASE("windowed observation marginals of the B1 preset") {
    // At any n the marked ladder of the B.1 preset is exactly Poisson(2) in
    // local time, so HM(1) over complete windows is Poisson(2).
    const Preset& preset = find_preset("crit-exp-B1-theta2");
    const int n = 4;
    const ProcessSpec spec = preset.family->member(n);
    const MarkRule mark = preset.family->mark_rule(n).rescaled(n);
    const double alpha = preset.family->scaling(n).alpha();
    WindowConfig cfg;
    cfg.local_budget = 1.0;
    cfg.path_cap = 40000.0;
    SampleSet marks;
    marks.label = "HM(1)";
    int incomplete = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto obs = observe_ladder_window(spec, mark, alpha, cfg, grid_seed(99, n, i));
        if (!obs.complete) {
            ++incomplete;
            continue;
        }
        marks.values.push_back(obs.h_mark);
    }
    CHECK(incomplete < 200);  // cap censoring is rare
    const auto rep = distribution_distance(marks, AnalyticLaw::poisson(2.0),
                                           Metric::tv_integers);
    CHECK(rep.value < 0.02);
}

TEST_CASE("full ladder observation of the subcritical preset") {
    const Preset& preset = find_preset("subcrit-exp-half");
    SampleSet lt;
    lt.label = "L(inf)";
    for (int i = 0; i < 4000; ++i) {
        const auto obs = observe_full_ladder(preset.base, preset.base_mark, 1.0, 200.0, 20.0,
                                             grid_seed(1, 1, i));
        lt.values.push_back(obs.total_local_time);
        lt.censored.push_back(obs.complete ? 0 : 1);
    }
    // Prop-3.2 kill rate: 1/W(inf) = psi'(0+) = 1/2.
    const auto rep = exponential_rate_test(lt, 0.5);
    CHECK(rep.rate_ok);
    CHECK(std::abs(rep.rate_mle - 0.5) < 0.05 * 0.5);
}
