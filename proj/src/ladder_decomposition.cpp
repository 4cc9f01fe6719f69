#include "fluctlab/ladder_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fluctlab/errors.hpp"

namespace fluctlab {

std::optional<LadderPoint> RecordScanner::on_event(double time, double size, int mark) {
    const double pre = value_ + drift_ * (time - last_time_);
    const double candidate = pre + size;
    value_ = candidate;
    last_time_ = time;
    if (!(candidate > supremum_)) return std::nullopt;
    double overshoot, undershoot;
    exact_split(size, candidate - supremum_, overshoot, undershoot);
    supremum_ += overshoot;
    ++records_;
    LadderPoint p;
    p.record_time = time;
    p.local_time = std::numeric_limits<double>::quiet_NaN();
    p.overshoot = overshoot;
    p.undershoot = undershoot;
    p.mark = mark;
    return p;
}

std::vector<LadderPoint> record_decomposition(const MarkedPath& path) {
    std::vector<LadderPoint> points;
    RecordScanner scanner(path.drift);
    for (const auto& e : path.events) {
        if (auto p = scanner.on_event(e.time, e.size, e.mark)) points.push_back(*p);
    }
    return points;
}

LocalTimeClock::LocalTimeClock(double alpha, std::vector<double> weights,
                               std::vector<double> record_times, double horizon)
    : alpha_(alpha),
      weights_(std::move(weights)),
      record_times_(std::move(record_times)),
      horizon_(horizon) {
    if (weights_.size() != record_times_.size() + 1)
        throw usage_error("LocalTimeClock: need exactly #records + 1 weights");
    prefix_.resize(weights_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        acc += weights_[i];
        prefix_[i] = acc;
    }
}

std::size_t LocalTimeClock::jump_count(double t) const {
    return std::upper_bound(record_times_.begin(), record_times_.end(), t) -
           record_times_.begin();
}

double LocalTimeClock::local_time(double t) const { return prefix_[jump_count(t)]; }

double LocalTimeClock::inverse(double s) const {
    // Smallest k with prefix_[k] > s; L jumps to prefix_[k] at the k-th
    // record (k = 0 means at time 0, where L(0) = tau_0 already).
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), s);
    if (it == prefix_.end()) return std::numeric_limits<double>::infinity();
    const std::size_t k = it - prefix_.begin();
    return k == 0 ? 0.0 : record_times_[k - 1];
}

double LocalTimeClock::total_local_time() const { return prefix_.back(); }

LocalTimeClock local_time_clock(const std::vector<LadderPoint>& points, double alpha,
                                double horizon, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw usage_error("local_time_clock: alpha must be > 0");
    SplitMix64 rng(seed);
    std::vector<double> weights(points.size() + 1);
    for (auto& w : weights) w = rng.next_exponential(alpha);
    std::vector<double> times(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) times[i] = points[i].record_time;
    return LocalTimeClock(alpha, std::move(weights), std::move(times), horizon);
}

LadderProcess trivariate_ladder(const std::vector<LadderPoint>& points,
                                const LocalTimeClock& clock) {
    LadderProcess out;
    out.points = points;
    const auto& w = clock.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        acc += w[i];
        out.points[i].local_time = acc;  // sum_{j<=i} tau_j
    }
    out.total_local_time = clock.total_local_time();
    // Finite-horizon observations are censored until an experiment-level
    // completeness rule says otherwise.
    out.censored = true;
    return out;
}

double LadderProcess::h_plus(double s) const {
    double v = 0.0;
    for (const auto& p : points) {
        if (p.local_time > s) break;
        v += p.overshoot;
    }
    return v;
}

double LadderProcess::h_minus(double s) const {
    double v = 0.0;
    for (const auto& p : points) {
        if (p.local_time > s) break;
        v += p.undershoot;
    }
    return v;
}

int LadderProcess::h_mark(double s) const {
    int v = 0;
    for (const auto& p : points) {
        if (p.local_time > s) break;
        v += p.mark;
    }
    return v;
}

std::optional<double> first_mark_time(const LadderProcess& ladder) {
    for (const auto& p : ladder.points)
        if (p.mark) return p.local_time;
    return std::nullopt;
}

std::string ladder_to_csv(const LadderProcess& ladder) {
    std::string out = "local_time,record_time,overshoot,undershoot,mark\n";
    char buf[120];
    for (const auto& p : ladder.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", p.local_time,
                      p.record_time, p.overshoot, p.undershoot, p.mark);
        out += buf;
    }
    return out;
}

}  // namespace fluctlab
