#include "fluctlab/convergence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fluctlab/errors.hpp"
#include "fluctlab/special.hpp"

namespace fluctlab {

AnalyticLaw AnalyticLaw::exponential(double rate) {
    return AnalyticLaw{Kind::exponential, rate, nullptr};
}
AnalyticLaw AnalyticLaw::poisson(double rate) { return AnalyticLaw{Kind::poisson, rate, nullptr}; }
AnalyticLaw AnalyticLaw::point_mass(double location) {
    return AnalyticLaw{Kind::point_mass, location, nullptr};
}
AnalyticLaw AnalyticLaw::ladder_normalized(std::shared_ptr<const LadderMeasure> m) {
    return AnalyticLaw{Kind::ladder_normalized, 0.0, std::move(m)};
}

LaplacePoint empirical_laplace(const SampleSet& samples, double beta, double gamma,
                               std::uint64_t bootstrap_seed, int resamples) {
    if (beta < 0.0 || gamma < 0.0) throw usage_error("empirical_laplace: beta, gamma >= 0");
    if (samples.values.empty()) throw usage_error("empirical_laplace: empty sample");
    const std::size_t n = samples.values.size();
    std::vector<double> transformed(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = samples.bivariate() ? samples.values2[i] : 0.0;
        transformed[i] = std::exp(-beta * samples.values[i] - gamma * y);
        mean += transformed[i];
    }
    mean /= n;
    if (beta == 0.0 && gamma == 0.0) return {1.0, 0.0};
    SplitMix64 rng(bootstrap_seed ^ STREAM_BOOTSTRAP);
    double bsum = 0.0, bsq = 0.0;
    for (int r = 0; r < resamples; ++r) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += transformed[rng.next_below(n)];
        m /= n;
        bsum += m;
        bsq += m * m;
    }
    const double bmean = bsum / resamples;
    const double bvar = std::max(0.0, bsq / resamples - bmean * bmean);
    return {mean, std::sqrt(bvar)};
}

double ks_statistic(std::vector<double> values, const std::function<double(double)>& cdf) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = cdf(values[i]);
        d = std::max(d, std::max(f - i / n, (i + 1) / n - f));
    }
    return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            const double tie = a[i];
            while (i < a.size() && a[i] == tie) ++i;
            while (j < b.size() && b[j] == tie) ++j;
        }
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

namespace {

double wasserstein1(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
        return s / a.size();
    }
    // General case: integrate |Qa - Qb| over the merged quantile grid.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double s = 0.0;
    std::size_t i = 0, j = 0;
    double u = 0.0;
    while (i < a.size() && j < b.size()) {
        const double ua = (i + 1) / na;
        const double ub = (j + 1) / nb;
        const double next = std::min(ua, ub);
        s += (next - u) * std::abs(a[i] - b[j]);
        u = next;
        if (ua <= next) ++i;
        if (ub <= next) ++j;
    }
    return s;
}

double tv_on_integers(const std::vector<double>& values, const AnalyticLaw& law) {
    std::map<long long, double> counts;
    for (double v : values) counts[std::llround(v)] += 1.0;
    const double n = static_cast<double>(values.size());
    long long kmax = counts.empty() ? 0 : counts.rbegin()->first;
    // Cover the analytic support well past the observed range.
    kmax = std::max<long long>(kmax + 10, static_cast<long long>(law.param * 3 + 20));
    double tv = 0.0;
    double mass_seen = 0.0;
    for (long long k = 0; k <= kmax; ++k) {
        const double p = poisson_pmf(static_cast<int>(k), law.param);
        const auto it = counts.find(k);
        const double ph = it == counts.end() ? 0.0 : it->second / n;
        tv += std::abs(ph - p);
        mass_seen += p;
    }
    tv += 1.0 - mass_seen;  // analytic tail never matched by the sample
    return 0.5 * tv;
}

double tv_two_samples(const std::vector<double>& a, const std::vector<double>& b) {
    std::map<long long, double> pa, pb;
    for (double v : a) pa[std::llround(v)] += 1.0 / a.size();
    for (double v : b) pb[std::llround(v)] += 1.0 / b.size();
    double tv = 0.0;
    for (const auto& [k, p] : pa) {
        const auto it = pb.find(k);
        tv += std::abs(p - (it == pb.end() ? 0.0 : it->second));
    }
    for (const auto& [k, p] : pb)
        if (pa.find(k) == pa.end()) tv += p;
    return 0.5 * tv;
}

std::function<double(double)> law_cdf(const AnalyticLaw& law) {
    switch (law.kind) {
        case AnalyticLaw::Kind::exponential: {
            const double rate = law.param;
            return [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); };
        }
        case AnalyticLaw::Kind::ladder_normalized: {
            auto m = law.ladder;
            return [m](double x) { return m->mu_plus_cdf(x); };
        }
        default:
            throw usage_error("KS needs a continuous analytic law (exponential or ladder)");
    }
}

}  // namespace

DistanceReport distribution_distance(const SampleSet& a, const SampleSet& b, Metric metric,
                                     const Thresholds& th) {
    DistanceReport rep;
    rep.label = a.label + " vs " + b.label;
    rep.n_index = a.n_index;
    rep.sample_size = a.values.size();
    rep.seed_base = a.seed_lo;
    switch (metric) {
        case Metric::ks:
            rep.metric = "KS";
            rep.value = ks_statistic_two_sample(a.values, b.values);
            rep.threshold = th.ks_coefficient *
                            std::sqrt((a.values.size() + b.values.size()) /
                                      (static_cast<double>(a.values.size()) * b.values.size()));
            break;
        case Metric::wasserstein1:
            rep.metric = "W1";
            rep.value = wasserstein1(a.values, b.values);
            rep.threshold = th.tv_threshold;
            break;
        case Metric::tv_integers:
            rep.metric = "TV";
            rep.value = tv_two_samples(a.values, b.values);
            rep.threshold = th.tv_threshold;
            break;
        default:
            throw usage_error("distribution_distance: metric needs an analytic law");
    }
    rep.pass = rep.value <= rep.threshold;
    return rep;
}

DistanceReport distribution_distance(const SampleSet& a, const AnalyticLaw& law, Metric metric,
                                     const Thresholds& th) {
    DistanceReport rep;
    rep.label = a.label;
    rep.n_index = a.n_index;
    rep.sample_size = a.values.size();
    rep.seed_base = a.seed_lo;
    switch (metric) {
        case Metric::ks:
            rep.metric = "KS";
            rep.value = ks_statistic(a.values, law_cdf(law));
            rep.threshold = th.ks_coefficient / std::sqrt(static_cast<double>(a.values.size()));
            break;
        case Metric::wasserstein1: {
            rep.metric = "W1";
            if (law.kind != AnalyticLaw::Kind::point_mass)
                throw usage_error("W1 against an analytic law supports point masses only");
            double s = 0.0;
            for (double v : a.values) s += std::abs(v - law.param);
            rep.value = s / a.values.size();
            rep.threshold = th.tv_threshold;
            break;
        }
        case Metric::tv_integers:
            rep.metric = "TV";
            if (law.kind != AnalyticLaw::Kind::poisson)
                throw usage_error("TV-on-integers needs a Poisson law");
            rep.value = tv_on_integers(a.values, law);
            rep.threshold = th.tv_threshold;
            break;
        default:
            throw usage_error("laplace-grid distances are built by the experiment layer");
    }
    rep.pass = rep.value <= rep.threshold;
    return rep;
}

DistanceReport laplace_grid_distance(const SampleSet& bivariate,
                                     const std::function<double(double, double)>& exponent,
                                     const std::vector<double>& betas,
                                     const std::vector<double>& gammas,
                                     const Thresholds& th) {
    DistanceReport rep;
    rep.label = bivariate.label + " Laplace grid";
    rep.metric = "laplace-gap";
    rep.n_index = bivariate.n_index;
    rep.sample_size = bivariate.values.size();
    rep.seed_base = bivariate.seed_lo;
    rep.threshold = 1.0;
    rep.value = 0.0;
    for (double beta : betas) {
        for (double gamma : gammas) {
            const auto emp = empirical_laplace(bivariate, beta, gamma);
            const double gap = std::abs(emp.estimate - std::exp(-exponent(beta, gamma)));
            if (emp.standard_error == 0.0) {
                if (gap > 0.0) rep.value = std::max(rep.value, 2.0);
            } else {
                rep.value =
                    std::max(rep.value, gap / (th.laplace_sigmas * emp.standard_error));
            }
        }
    }
    rep.pass = rep.value <= rep.threshold;
    return rep;
}

RateTestReport exponential_rate_test(const SampleSet& samples, double rate,
                                     const Thresholds& th, double sigmas) {
    if (!(rate > 0.0)) throw usage_error("exponential_rate_test: rate must be > 0");
    RateTestReport rep;
    double exposure = 0.0;
    std::vector<double> uncensored;
    for (std::size_t i = 0; i < samples.values.size(); ++i) {
        exposure += samples.values[i];
        const bool cens = i < samples.censored.size() && samples.censored[i];
        if (!cens) uncensored.push_back(samples.values[i]);
    }
    rep.uncensored = uncensored.size();
    if (rep.uncensored < 1000)
        throw precision_failure("exponential_rate_test: " + std::to_string(rep.uncensored) +
                                " uncensored values, need >= 1000");
    rep.rate_mle = uncensored.size() / exposure;
    rep.standard_error = rep.rate_mle / std::sqrt(static_cast<double>(uncensored.size()));
    rep.rate_ok = std::abs(rep.rate_mle - rate) <= sigmas * rep.standard_error;
    rep.ks = ks_statistic(std::move(uncensored),
                          [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
    rep.ks_threshold = th.ks_coefficient / std::sqrt(static_cast<double>(rep.uncensored));
    rep.ks_ok = rep.ks <= rep.ks_threshold;
    rep.pass = rep.rate_ok && rep.ks_ok;
    return rep;
}

ChiSquareReport chi_square_2d(const SampleSet& pairs, const LadderMeasure& mu, int bins_x,
                              int bins_y, double p_min) {
    if (!pairs.bivariate()) throw usage_error("chi_square_2d: needs (undershoot, overshoot) pairs");
    const std::size_t n = pairs.values.size();
    // Bin edges at marginal quantiles (numeric CDF inversion by bisection).
    auto invert = [](const std::function<double(double)>& cdf, double q) {
        double lo = 0.0, hi = 1.0;
        while (cdf(hi) < q) hi *= 2.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < q ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto x_cdf = [&mu](double x) { return mu.undershoot_cdf(x); };
    auto y_cdf = [&mu](double y) { return mu.mu_plus_cdf(y); };
    std::vector<double> xe(bins_x + 1, 0.0), ye(bins_y + 1, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 1; i < bins_x; ++i) xe[i] = invert(x_cdf, static_cast<double>(i) / bins_x);
    for (int j = 1; j < bins_y; ++j) ye[j] = invert(y_cdf, static_cast<double>(j) / bins_y);
    xe[bins_x] = inf;
    ye[bins_y] = inf;

    std::vector<double> expected(bins_x * bins_y);
    const double mass = mu.mu_plus_mass();
    for (int i = 0; i < bins_x; ++i)
        for (int j = 0; j < bins_y; ++j) {
            const double hi_y = std::isinf(ye[j + 1]) ? 1e9 : ye[j + 1];
            const double cell = std::isinf(xe[i + 1])
                                    ? mu.joint_cell_mass(xe[i], inf, ye[j], hi_y)
                                    : mu.joint_cell_mass(xe[i], xe[i + 1], ye[j], hi_y);
            expected[i * bins_y + j] = cell / mass * n;
        }

    std::vector<double> observed(bins_x * bins_y, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double x = pairs.values[r];
        const double y = pairs.values2[r];
        const int i = std::upper_bound(xe.begin() + 1, xe.end(), x) - (xe.begin() + 1);
        const int j = std::upper_bound(ye.begin() + 1, ye.end(), y) - (ye.begin() + 1);
        observed[std::min(i, bins_x - 1) * bins_y + std::min(j, bins_y - 1)] += 1.0;
    }

    ChiSquareReport rep;
    for (std::size_t c = 0; c < expected.size(); ++c) {
        if (expected[c] <= 0.0) continue;
        const double d = observed[c] - expected[c];
        rep.statistic += d * d / expected[c];
    }
    rep.df = bins_x * bins_y - 1;
    rep.p_value = chi_square_sf(rep.statistic, rep.df);
    rep.pass = rep.p_value > p_min;
    return rep;
}

double tv_sampling_mean(const std::vector<double>& pmf, std::size_t n) {
    double s = 0.0;
    for (double p : pmf) s += std::sqrt(2.0 * p * (1.0 - p) / (M_PI * n));
    return 0.5 * s;
}

bool trend_converged(double first, double last, double noise_floor) {
    return last < first || last <= noise_floor;
}

JsConditionVerdict js_condition_check(const ProcessFamily& family,
                                      const std::vector<int>& n_grid, const LimitSpec& limit,
                                      const Tolerances& tol) {
    auto h = [](double u) { return std::min(1.0, u); };
    std::vector<std::function<double(double)>> bank = {
        [](double u) { return std::clamp(u - 1.0, 0.0, 1.0); },
        [](double u) { return std::clamp(2.0 * (u - 0.5), 0.0, 1.0); },
        [](double u) { return std::clamp(0.5 * (u - 2.0), 0.0, 1.0); },
    };
    const double c_limit = limit.c;
    double h2_limit = limit.b2;
    std::vector<double> g_limit(bank.size(), 0.0);
    if (!limit.limit_measure.is_zero()) {
        h2_limit += limit.limit_measure.integrate([&](double u) { return h(u) * h(u); },
                                                  tol.psi_quad_rel);
        for (std::size_t g = 0; g < bank.size(); ++g)
            g_limit[g] = limit.limit_measure.integrate(bank[g], tol.psi_quad_rel);
    }

    JsConditionVerdict verdict;
    for (int n : n_grid) {
        const ProcessSpec member = family.member(n);
        JsConditionReport row;
        row.n_index = n;
        const double c_n =
            -member.drift - member.levy.integrate(h, tol.psi_quad_rel);
        row.c_gap = std::abs(c_n - c_limit);
        const double h2_n =
            member.levy.integrate([&](double u) { return h(u) * h(u); }, tol.psi_quad_rel);
        row.h2_gap = std::abs(h2_n - h2_limit);
        for (std::size_t g = 0; g < bank.size(); ++g)
            row.g_gaps.push_back(
                std::abs(member.levy.integrate(bank[g], tol.psi_quad_rel) - g_limit[g]));
        verdict.rows.push_back(std::move(row));
    }
    verdict.trend_ok = true;
    if (verdict.rows.size() >= 2) {
        const auto& first = verdict.rows.front();
        const auto& last = verdict.rows.back();
        const double eps = 1e-12;
        verdict.trend_ok = last.c_gap <= first.c_gap + eps && last.h2_gap <= first.h2_gap + eps;
        for (std::size_t g = 0; g < first.g_gaps.size(); ++g)
            verdict.trend_ok = verdict.trend_ok && last.g_gaps[g] <= first.g_gaps[g] + eps;
    }
    return verdict;
}

WindowObservation observe_ladder_window(const ProcessSpec& spec, const MarkRule& mark,
                                        double alpha, const WindowConfig& cfg,
                                        std::uint64_t seed, const PointSink& sink) {
    WindowObservation obs;
    SplitMix64 clock(seed ^ STREAM_CLOCK);
    double cum = clock.next_exponential(alpha);  // tau_0 = L(0)
    if (cum > cfg.local_budget) {
        obs.complete = true;
        obs.exposure = cfg.local_budget;
        obs.crossing_time = 0.0;
        return obs;
    }
    EventStream stream(spec, mark, seed);
    RecordScanner scan(spec.drift);
    JumpEvent e;
    while (stream.next(cfg.path_cap, e)) {
        auto p = scan.on_event(e.time, e.size, e.mark);
        if (!p) continue;
        // Ladder point at local time cum = tau_0 + ... + tau_i.
        ++obs.points;
        obs.h_plus += p->overshoot;
        obs.h_mark += p->mark;
        if (sink) sink(*p, cum);
        if (p->mark && !obs.mark_seen) {
            obs.mark_seen = true;
            obs.first_mark_local = cum;
            if (cfg.stop_at_first_mark) {
                obs.complete = true;
                obs.exposure = cum;
                obs.crossing_time = e.time;
                return obs;
            }
        }
        cum += clock.next_exponential(alpha);
        if (cum > cfg.local_budget) {
            obs.complete = true;
            obs.exposure = cfg.local_budget;
            obs.crossing_time = e.time;
            return obs;
        }
    }
    obs.complete = false;
    obs.exposure = std::min(cum, cfg.local_budget);
    return obs;
}

FullLadderObservation observe_full_ladder(const ProcessSpec& spec, const MarkRule& mark,
                                          double alpha, double horizon, double min_gap,
                                          std::uint64_t seed) {
    FullLadderObservation obs;
    SplitMix64 clock(seed ^ STREAM_CLOCK);
    double cum = clock.next_exponential(alpha);
    EventStream stream(spec, mark, seed);
    RecordScanner scan(spec.drift);
    JumpEvent e;
    while (stream.next(horizon, e)) {
        auto p = scan.on_event(e.time, e.size, e.mark);
        if (!p) continue;
        ++obs.records;
        cum += clock.next_exponential(alpha);
    }
    obs.total_local_time = cum;
    obs.end_gap = scan.supremum() - scan.value_at(horizon);
    obs.complete = obs.end_gap >= min_gap;
    return obs;
}

}  // namespace fluctlab
