#include "fluctlab/random_walk_bridge.hpp"

#include <cmath>
#include <cstdint>

#include "fluctlab/errors.hpp"

namespace fluctlab {

WalkSample discretize_path(const MarkedPath& path, int k) {
    if (k <= 0) throw usage_error("discretize_path: k must be positive");
    if (!(k * path.horizon >= 1.0))
        throw usage_error("discretize_path: need k * horizon >= 1");
    WalkSample w;
    w.step = 1.0 / k;
    w.source_seed = path.seed;
    const std::int64_t steps = static_cast<std::int64_t>(std::floor(path.horizon * k + 1e-12));
    w.values.resize(steps + 1);
    w.values[0] = 0.0;
    double v = 0.0;
    double t_last = 0.0;
    std::size_t next_event = 0;
    for (std::int64_t j = 1; j <= steps; ++j) {
        const double g = j * w.step;
        while (next_event < path.events.size() && path.events[next_event].time <= g) {
            const auto& e = path.events[next_event];
            v = v + path.drift * (e.time - t_last) + e.size;
            t_last = e.time;
            ++next_event;
        }
        w.values[j] = v + path.drift * (g - t_last);
    }
    return w;
}

namespace {

// Streams the strict-record ladder of the k-discretized walk directly off the
// jump events: between jumps the walk declines, so only the first grid point
// at or after each jump can set a record.
class WalkRecordScanner {
  public:
    WalkRecordScanner(double drift, int k, double horizon)
        : drift_(drift),
          step_(1.0 / k),
          k_(k),
          last_grid_(static_cast<std::int64_t>(std::floor(horizon * k + 1e-12))) {}

    // Feed one jump; returns true while scanning should continue.
    template <typename OnRecord>
    void on_jump(double time, double size, const OnRecord& cb) {
        const double grid_time = pending_ * step_;
        if (pending_ > 0 && grid_time < time) {
            evaluate(grid_time, cb);
            pending_ = 0;
        }
        value_ = value_ + drift_ * (time - t_last_) + size;
        t_last_ = time;
        const std::int64_t idx = static_cast<std::int64_t>(std::floor(time * k_)) + 1;
        pending_ = idx <= last_grid_ ? idx : 0;
    }

    template <typename OnRecord>
    void finish(const OnRecord& cb) {
        if (pending_ > 0) {
            evaluate(pending_ * step_, cb);
            pending_ = 0;
        }
    }

    double max() const { return max_; }

  private:
    template <typename OnRecord>
    void evaluate(double grid_time, const OnRecord& cb) {
        const double s = value_ + drift_ * (grid_time - t_last_);
        if (s > max_) {
            max_ = s;
            cb(pending_, s);
        }
    }

    double drift_;
    double step_;
    int k_;
    std::int64_t last_grid_;
    std::int64_t pending_ = 0;
    double value_ = 0.0;
    double t_last_ = 0.0;
    double max_ = 0.0;
};

}  // namespace

FristedtEstimate fristedt_alpha(const WalkLaw& law, int steps_per_unit, int k_max,
                                std::uint64_t replicates, double se_target) {
    if (k_max <= 0 || replicates == 0)
        throw usage_error("fristedt_alpha: k_max and replicates must be positive");
    const double n = static_cast<double>(steps_per_unit);
    std::vector<double> coeff(k_max + 1);
    for (int k = 1; k <= k_max; ++k) coeff[k] = std::exp(-k / n) / k;

    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        const WalkSample w = law(r);
        if (w.values.size() < static_cast<std::size_t>(k_max) + 1)
            throw usage_error("fristedt_alpha: walk shorter than k_max");
        double x = 0.0;
        for (int k = 1; k <= k_max; ++k)
            if (w.values[k] > 0.0) x += coeff[k];
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / replicates;
    const double var = std::max(0.0, sum_sq / replicates - mean * mean);
    const double se_log = std::sqrt(var / replicates);
    FristedtEstimate est;
    est.alpha = std::exp(mean);
    est.standard_error = est.alpha * se_log;
    est.tail_bound = std::exp(-static_cast<double>(k_max) / n) /
                     (k_max * (-std::expm1(-1.0 / n)));
    est.k_max = k_max;
    if (se_target > 0.0 && est.standard_error > se_target)
        throw precision_failure("fristedt_alpha: achieved s.e. " +
                                std::to_string(est.standard_error) + " above target " +
                                std::to_string(se_target));
    return est;
}

WalkLadderEstimate walk_ladder_exponent(const ProcessSpec& spec, const MarkRule& mark,
                                        double horizon, int steps_per_unit, double alpha,
                                        double delta, double beta, std::uint64_t replicates,
                                        std::uint64_t seed_base, double max_censored_fraction) {
    if (!(alpha > 0.0) || replicates == 0)
        throw usage_error("walk_ladder_exponent: need alpha > 0 and replicates > 0");
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t censored = 0;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        const std::uint64_t seed = replicate_seed(seed_base, r);
        // N_1: arrivals of the Exp(alpha) weight clock in [0, 1].
        SplitMix64 clock(seed ^ STREAM_CLOCK);
        std::uint64_t n1 = 0;
        for (double acc = clock.next_exponential(alpha); acc <= 1.0;
             acc += clock.next_exponential(alpha))
            ++n1;
        double contrib;
        if (n1 == 0) {
            contrib = 1.0;  // T(1) = 0, G(1) = 0
        } else {
            EventStream stream(spec, mark, seed);
            WalkRecordScanner scanner(spec.drift, steps_per_unit, horizon);
            std::uint64_t records = 0;
            double t_grid = -1.0, height = 0.0;
            auto on_record = [&](std::int64_t idx, double s) {
                ++records;
                if (records == n1) {
                    t_grid = static_cast<double>(idx) / steps_per_unit;
                    height = s;
                }
            };
            JumpEvent e;
            while (records < n1 && stream.next(horizon, e))
                scanner.on_jump(e.time, e.size, on_record);
            if (records < n1) scanner.finish(on_record);
            if (records < n1) {
                ++censored;
                contrib = 0.0;
            } else {
                contrib = std::exp(-delta * t_grid - beta * height);
            }
        }
        sum += contrib;
        sum_sq += contrib * contrib;
    }
    const double frac = static_cast<double>(censored) / replicates;
    if (frac > max_censored_fraction)
        throw horizon_too_short("walk_ladder_exponent: censored fraction " +
                                std::to_string(frac) + " exceeds " +
                                std::to_string(max_censored_fraction));
    const double mean = sum / replicates;
    const double var = std::max(0.0, sum_sq / replicates - mean * mean);
    WalkLadderEstimate est;
    est.exponent = -std::log(mean);
    est.standard_error = std::sqrt(var / replicates) / mean;
    est.censored_fraction = frac;
    return est;
}

std::vector<double> walk_record_increments(const MarkedPath& path, int k) {
    std::vector<double> incs;
    WalkRecordScanner scanner(path.drift, k, path.horizon);
    double prev = 0.0;
    auto on_record = [&](std::int64_t, double s) {
        incs.push_back(s - prev);
        prev = s;
    };
    for (const auto& e : path.events) scanner.on_jump(e.time, e.size, on_record);
    scanner.finish(on_record);
    return incs;
}

}  // namespace fluctlab
