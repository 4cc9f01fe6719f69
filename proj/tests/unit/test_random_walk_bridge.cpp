#include <doctest.h>

#include <cmath>

#include "fluctlab/convergence_lab.hpp"
#include "fluctlab/errors.hpp"
#include "fluctlab/random_walk_bridge.hpp"

using namespace fluctlab;

namespace {

ProcessSpec exp_spec(double mass) {
    ProcessSpec s;
    s.drift = -1.0;
    s.levy = LevyMeasure::exponential(mass, 1.0);
    return s;
}

}  // namespace

TEST_CASE("discretize_path") {
    SUBCASE("pure drift: S(j) = -j/4") {
        ProcessSpec s;
        s.drift = -1.0;
        const auto path = sample_marked_path(s, MarkRule::constant(0.0), 3.0, 1);
        const auto w = discretize_path(path, 4);
        REQUIRE(w.values.size() == 13);
        for (std::size_t j = 0; j < w.values.size(); ++j)
            CHECK(w.values[j] == doctest::Approx(-0.25 * static_cast<double>(j)));
    }
    SUBCASE("single-jump hand trace") {
        MarkedPath p;
        p.drift = -1.0;
        p.horizon = 2.0;
        p.seed = 0;
        p.events.push_back({0.6, 2.0, 0});
        const auto w = discretize_path(p, 2);
        // grid 0, .5, 1, 1.5, 2 -> values 0, -.5, 2 - 1 = 1, 0.5, 0
        REQUIRE(w.values.size() == 5);
        CHECK(w.values[0] == 0.0);
        CHECK(w.values[1] == doctest::Approx(-0.5));
        CHECK(w.values[2] == doctest::Approx(1.0));
        CHECK(w.values[3] == doctest::Approx(0.5));
        CHECK(w.values[4] == doctest::Approx(0.0));
    }
    SUBCASE("refinement consistency at k and 2k") {
        const auto path = sample_marked_path(exp_spec(1.0), MarkRule::constant(0.0), 20.0, 9);
        const auto a = discretize_path(path, 8);
        const auto b = discretize_path(path, 16);
        for (std::size_t j = 0; j < a.values.size(); ++j)
            CHECK(a.values[j] == b.values[2 * j]);
    }
}

TEST_CASE("fristedt closed forms") {
    SUBCASE("never-positive walk: alpha = 1") {
        WalkLaw law = [](std::uint64_t) {
            WalkSample w;
            w.step = 1.0;
            w.values.assign(300, -1.0);
            w.values[0] = 0.0;
            return w;
        };
        const auto est = fristedt_alpha(law, 1, 250, 100);
        CHECK(est.alpha == 1.0);
        CHECK(est.standard_error == 0.0);
    }
    SUBCASE("always-positive walk at n=1: alpha = 1/(1-exp(-1))") {
        WalkLaw law = [](std::uint64_t) {
            WalkSample w;
            w.step = 1.0;
            w.values.assign(300, 1.0);
            w.values[0] = 0.0;
            return w;
        };
        const auto est = fristedt_alpha(law, 1, 250, 100);
        // Truncated geometric series: tail below the analytic bound.
        CHECK(est.alpha ==
              doctest::Approx(1.0 / (1.0 - std::exp(-1.0))).epsilon(1e-6));
        CHECK(est.tail_bound < 1e-6 * est.alpha);
    }
    SUBCASE("alpha estimates increase along the scaling grid") {
        double prev = 0.0;
        const double horizon = 20.0;
        for (int n : {4, 16, 64}) {
            const Scaling s{n, static_cast<double>(n) * n};
            const ProcessSpec spec = rescaled(exp_spec(1.0), s);
            WalkLaw law = [spec, n, horizon](std::uint64_t i) {
                return discretize_path(
                    sample_marked_path(spec, MarkRule::constant(0.0), horizon,
                                       replicate_seed(0xF00D, i)),
                    n);
            };
            // Tail bound e^{-K/n}/(K(1-e^{-1/n})) < 1e-6 within the horizon.
            const int k_max = std::min<int>(
                static_cast<int>(std::ceil(n * std::log(1e6 / -std::expm1(-1.0 / n)))),
                static_cast<int>(horizon * n) - 1);
            const auto est = fristedt_alpha(law, n, k_max, 4000);
            CHECK(est.tail_bound < 1e-6);
            CHECK(est.alpha > prev + 2.0 * est.standard_error);
            prev = est.alpha;
        }
    }
}

TEST_CASE("walk ladder exponent") {
    SUBCASE("delta = beta = 0 with no censoring gives exponent 0") {
        // Supercritical member: records arrive at a positive rate forever, so
        // a long horizon leaves nothing censored.
        const auto est = walk_ladder_exponent(exp_spec(2.0), MarkRule::constant(0.0), 400.0,
                                              1024, 1.0, 0.0, 0.0, 2000, 0xBEEF);
        CHECK(est.censored_fraction == 0.0);
        CHECK(est.exponent == 0.0);
    }
    SUBCASE("monotone in delta and beta") {
        double prev = -1.0;
        for (double delta : {0.0, 0.5, 1.0}) {
            const auto est = walk_ladder_exponent(exp_spec(2.0), MarkRule::constant(0.0),
                                                  400.0, 1024, 1.0, delta, 0.0, 2000, 0xBEEF);
            CHECK(est.exponent >= prev);
            prev = est.exponent;
        }
        prev = -1.0;
        for (double beta : {0.0, 0.5, 1.0}) {
            const auto est = walk_ladder_exponent(exp_spec(2.0), MarkRule::constant(0.0),
                                                  400.0, 1024, 1.0, 0.0, beta, 2000, 0xBEEF);
            CHECK(est.exponent >= prev);
            prev = est.exponent;
        }
    }
    SUBCASE("unreachable precision target raises precision-failure") {
        WalkLaw law = [](std::uint64_t i) {
            WalkSample w;
            w.step = 1.0;
            w.values.assign(300, i % 2 ? 1.0 : -1.0);
            w.values[0] = 0.0;
            return w;
        };
        CHECK_THROWS_AS((void)fristedt_alpha(law, 1, 250, 50, /*se_target=*/1e-9), Error);
    }
    SUBCASE("too-short horizon raises the censoring error") {
        CHECK_THROWS_AS((void)walk_ladder_exponent(exp_spec(1.0), MarkRule::constant(0.0),
                                                   2.0, 256, 1.0, 1.0, 0.0, 500, 7),
                        Error);
    }
}

TEST_CASE("kappa_n(1,0) phi_n(1) = 1 at n = 16") {
    const Scaling s{16, 256.0};
    const ProcessSpec spec = rescaled(exp_spec(1.0), s);
    const double phi = phi_inverse(spec, 1.0);
    const auto est = walk_ladder_exponent(spec, MarkRule::constant(0.0), 1000.0, 32768,
                                          s.alpha(), 1.0, 0.0, 20000, 0xFEED);
    CHECK(std::abs(est.exponent * phi - 1.0) < 0.02);
}

TEST_CASE("walk record increments approach the continuous overshoots") {
    // Unscaled critical exponential at k = 2^10: KS between the walk-ladder
    // increment sample and the path-ladder overshoot sample below 0.02.
    std::vector<double> walk_incs, over;
    for (int i = 0; i < 400; ++i) {
        const auto path = sample_marked_path(exp_spec(1.0), MarkRule::constant(0.0), 2500.0,
                                             replicate_seed(0xABCD, i));
        const auto w = walk_record_increments(path, 1024);
        walk_incs.insert(walk_incs.end(), w.begin(), w.end());
        for (const auto& p : record_decomposition(path)) over.push_back(p.overshoot);
    }
    REQUIRE(walk_incs.size() > 10000);
    const double ks = ks_statistic_two_sample(walk_incs, over);
    CHECK(ks < 0.02);
}
