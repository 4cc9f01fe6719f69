#include <doctest.h>

#include <cmath>

#include "fluctlab/convergence_lab.hpp"
#include "fluctlab/ladder_decomposition.hpp"
#include "fluctlab/path_simulator.hpp"

using namespace fluctlab;

namespace {

ProcessSpec exp_spec(double mass) {
    ProcessSpec s;
    s.drift = -1.0;
    s.levy = LevyMeasure::exponential(mass, 1.0);
    return s;
}

MarkedPath hand_path(std::vector<JumpEvent> events) {
    MarkedPath p;
    p.drift = -1.0;
    p.horizon = 10.0;
    p.seed = 0;
    p.events = std::move(events);
    return p;
}

}  // namespace

TEST_CASE("record decomposition hand traces") {
    SUBCASE("no jumps: empty") {
        CHECK(record_decomposition(hand_path({})).empty());
    }
    SUBCASE("single jump: overshoot 3, undershoot 2") {
        const auto pts = record_decomposition(hand_path({{2.0, 5.0, 1}}));
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].record_time == 2.0);
        CHECK(pts[0].overshoot == doctest::Approx(3.0));
        CHECK(pts[0].undershoot == doctest::Approx(2.0));
        CHECK(pts[0].mark == 1);
    }
    SUBCASE("non-record followed by record") {
        const auto pts = record_decomposition(hand_path({{1.0, 0.5, 0}, {1.2, 3.0, 1}}));
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].record_time == doctest::Approx(1.2));
        CHECK(pts[0].overshoot == doctest::Approx(2.3));
        CHECK(pts[0].undershoot == doctest::Approx(0.7));
    }
    SUBCASE("tie with old supremum is not a record") {
        // value(2-) = -2, jump of exactly 2 lands on the supremum 0.
        const auto pts = record_decomposition(hand_path({{2.0, 2.0, 1}}));
        CHECK(pts.empty());
    }
}

TEST_CASE("overshoot + undershoot reproduces the jump size exactly") {
    std::size_t total = 0;
    for (int seed = 0; seed < 20; ++seed) {
        const auto path =
            sample_marked_path(exp_spec(1.0), MarkRule::constant(1.0), 5000.0, 42 + seed);
        const auto pts = record_decomposition(path);
        std::size_t event_idx = 0;
        for (const auto& p : pts) {
            while (path.events[event_idx].time != p.record_time) ++event_idx;
            CHECK(p.overshoot + p.undershoot == path.events[event_idx].size);
            CHECK(p.overshoot > 0.0);
            CHECK(p.undershoot >= 0.0);
        }
        total += pts.size();
    }
    CHECK(total > 500);
}

TEST_CASE("exact split survives adversarial magnitudes") {
    SplitMix64 rng(9);
    for (int i = 0; i < 200000; ++i) {
        const double size = std::exp(40.0 * (rng.next_unit_co() - 0.5));
        const double frac = rng.next_unit_co();
        double o, u;
        exact_split(size, size * frac, o, u);
        CHECK(o + u == size);
        CHECK(o >= 0.0);
        CHECK(u >= 0.0);
    }
    // Tiny raw overshoot relative to the size.
    double o, u;
    exact_split(1.0, 1e-18, o, u);
    CHECK(o + u == 1.0);
    exact_split(1.0, 1.0 - 1e-18, o, u);
    CHECK(o + u == 1.0);
}

TEST_CASE("local time clock conventions") {
    SUBCASE("no records: L(t) = tau_0, inverse censors") {
        const auto clock = local_time_clock({}, 2.0, 10.0, 123);
        REQUIRE(clock.weights().size() == 1);
        const double tau0 = clock.weights()[0];
        CHECK(clock.local_time(0.0) == tau0);
        CHECK(clock.local_time(9.0) == tau0);
        CHECK(clock.inverse(tau0 * 0.5) == 0.0);
        CHECK(std::isinf(clock.inverse(tau0 * 1.5)));
        CHECK(clock.total_local_time() == tau0);
    }
    SUBCASE("weight mean is 1/alpha") {
        double sum = 0.0;
        const int n = 100000;
        std::vector<LadderPoint> one(1);
        one[0].record_time = 1.0;
        for (int i = 0; i < n; ++i) {
            const auto clock = local_time_clock(one, 4.0, 10.0, replicate_seed(55, i));
            sum += clock.weights()[1];
        }
        const double mean = sum / n;
        CHECK(std::abs(mean - 0.25) < 3.0 * 0.25 / std::sqrt(n));
    }
}

TEST_CASE("trivariate ladder assigns prefix local times") {
    std::vector<LadderPoint> pts(1);
    pts[0].record_time = 2.0;
    pts[0].overshoot = 3.0;
    pts[0].undershoot = 2.0;
    pts[0].mark = 1;
    // Weights fixed by hand: tau_0 = 0.4, tau_1 = 1.1.
    LocalTimeClock clock(1.0, {0.4, 1.1}, {2.0}, 10.0);
    const auto ladder = trivariate_ladder(pts, clock);
    REQUIRE(ladder.points.size() == 1);
    CHECK(ladder.points[0].local_time == doctest::Approx(0.4));
    CHECK(ladder.h_plus(0.39) == 0.0);
    CHECK(ladder.h_plus(0.4) == doctest::Approx(3.0));
    CHECK(ladder.h_minus(0.4) == doctest::Approx(2.0));
    CHECK(ladder.h_mark(0.4) == 1);
    CHECK(ladder.total_local_time == doctest::Approx(1.5));
    CHECK(ladder.censored);
    CHECK(first_mark_time(ladder) == doctest::Approx(0.4));
}

TEST_CASE("H+(t) equals the path supremum at the inverse local time, exactly") {
    const auto path = sample_marked_path(exp_spec(1.0), MarkRule::constant(1.0), 2000.0, 7);
    const auto pts = record_decomposition(path);
    REQUIRE(pts.size() > 20);
    const auto clock = local_time_clock(pts, 1.0, path.horizon, 99);
    const auto ladder = trivariate_ladder(pts, clock);
    SplitMix64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const double s = clock.total_local_time() * rng.next_unit_co();
        const double t = clock.inverse(s);
        if (std::isinf(t)) continue;
        CHECK(ladder.h_plus(s) == path.supremum_at(t));  // bitwise
    }
}

TEST_CASE("first mark time conventions") {
    const auto path = sample_marked_path(exp_spec(1.0), MarkRule::constant(0.0), 100.0, 3);
    const auto pts = record_decomposition(path);
    const auto clock = local_time_clock(pts, 1.0, path.horizon, 5);
    CHECK(!first_mark_time(trivariate_ladder(pts, clock)));  // f = 0: censored

    const auto marked = sample_marked_path(exp_spec(1.0), MarkRule::constant(1.0), 100.0, 3);
    const auto mpts = record_decomposition(marked);
    REQUIRE(!mpts.empty());
    const auto mclock = local_time_clock(mpts, 1.0, marked.horizon, 5);
    const auto ladder = trivariate_ladder(mpts, mclock);
    // f = 1: e_n is the local time of the first ladder point.
    CHECK(first_mark_time(ladder) == ladder.points[0].local_time);
}

TEST_CASE("marks occur only at ladder points; f=1 marks every point") {
    const auto path = sample_marked_path(exp_spec(1.0), MarkRule::constant(1.0), 500.0, 21);
    const auto pts = record_decomposition(path);
    for (const auto& p : pts) CHECK(p.mark == 1);
}

TEST_CASE("windowed observation matches the batch decomposition") {
    // The streaming window with a generous budget reproduces the batch
    // ladder of the same path and clock stream.
    const ProcessSpec spec = exp_spec(1.0);
    const MarkRule mark = MarkRule::constant(1.0);
    const std::uint64_t seed = 424242;
    WindowConfig cfg;
    cfg.local_budget = 1e9;
    cfg.path_cap = 300.0;
    std::vector<LadderPoint> streamed;
    std::vector<double> locals;
    const auto obs = observe_ladder_window(spec, mark, 1.0, cfg, seed,
                                           [&](const LadderPoint& p, double s) {
                                               streamed.push_back(p);
                                               locals.push_back(s);
                                           });
    CHECK(!obs.complete);  // budget unreachable: censored by the cap
    const auto path = sample_marked_path(spec, mark, 300.0, seed);
    const auto pts = record_decomposition(path);
    const auto clock = local_time_clock(pts, 1.0, 300.0, seed ^ STREAM_CLOCK);
    const auto ladder = trivariate_ladder(pts, clock);
    REQUIRE(streamed.size() == ladder.points.size());
    for (std::size_t i = 0; i < streamed.size(); ++i) {
        CHECK(streamed[i].record_time == ladder.points[i].record_time);
        CHECK(streamed[i].overshoot == ladder.points[i].overshoot);
        CHECK(locals[i] == ladder.points[i].local_time);
    }
    CHECK(obs.exposure == doctest::Approx(std::min(clock.total_local_time(), 1e9)));
}

TEST_CASE("ladder points form a Poisson flow in local time") {
    // Inter-point local times pool to Exp(mu+ mass) and the points-per-window
    // count matches the analytic rate; this ties the d_n/n clock to the
    // ladder measure mass.
    const ProcessSpec spec = exp_spec(1.0);
    const MarkRule mark = MarkRule::constant(1.0);
    const auto mu = ladder_measure(spec, mark);
    const double rate = mu.mu_plus_mass();  // = alpha at criticality
    WindowConfig cfg;
    cfg.local_budget = 5.0;
    cfg.path_cap = 3e6;
    std::vector<double> gaps;
    double points = 0.0;
    int complete = 0;
    for (int i = 0; i < 3000; ++i) {
        double last = 0.0;
        std::vector<double> locals;
        const auto obs = observe_ladder_window(spec, mark, 1.0, cfg, grid_seed(0xF10, 1, i),
                                               [&](const LadderPoint&, double s) {
                                                   locals.push_back(s);
                                               });
        if (!obs.complete) continue;
        ++complete;
        points += static_cast<double>(obs.points);
        for (double s : locals) {
            gaps.push_back(s - last);
            last = s;
        }
    }
    REQUIRE(gaps.size() > 5000);
    const double ks = ks_statistic(
        gaps, [&](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(gaps.size())));
    const double mean_points = points / complete;
    const double expected = cfg.local_budget * rate;
    CHECK(std::abs(mean_points - expected) <
          3.0 * std::sqrt(expected / complete));
}

TEST_CASE("ladder csv dump") {
    std::vector<LadderPoint> pts(1);
    pts[0].record_time = 2.0;
    pts[0].overshoot = 3.0;
    pts[0].undershoot = 2.0;
    pts[0].mark = 1;
    LocalTimeClock clock(1.0, {0.5, 0.25}, {2.0}, 10.0);
    const std::string csv = ladder_to_csv(trivariate_ladder(pts, clock));
    CHECK(csv == "local_time,record_time,overshoot,undershoot,mark\n0.5,2,3,2,1\n");
}
