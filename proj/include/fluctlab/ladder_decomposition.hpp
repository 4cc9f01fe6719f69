#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluctlab/path_simulator.hpp"

namespace fluctlab {

struct LadderPoint {
    double record_time;  // path time of the record jump
    double local_time;   // assigned by trivariate_ladder; NaN before that
    double overshoot;    // new supremum - old supremum, > 0
    double undershoot;   // old supremum - pre-jump value, >= 0
    int mark;

    double jump_size() const { return overshoot + undershoot; }
};

// Streaming record detector. Feed events in time order; between jumps the
// drift is negative, so the supremum moves only at record jumps. The running
// supremum is maintained as the cumulative sum of overshoots, which makes
// H+(t) = supremum(L^{-1}(t)) an exact identity.
class RecordScanner {
  public:
    explicit RecordScanner(double drift) : drift_(drift) {}

    std::optional<LadderPoint> on_event(double time, double size, int mark);

    double value_at(double time) const { return value_ + drift_ * (time - last_time_); }
    double supremum() const { return supremum_; }
    std::size_t record_count() const { return records_; }

  private:
    double drift_;
    double value_ = 0.0;
    double last_time_ = 0.0;
    double supremum_ = 0.0;
    std::size_t records_ = 0;
};

// Records of a whole path, local times unassigned.
std::vector<LadderPoint> record_decomposition(const MarkedPath& path);

// The exponential-weighted clock: L(t) = sum_{i=0}^{l(t)} tau_i where l(t)
// counts records up to t and tau_i are iid Exp(alpha). tau_0 is consumed at
// t = 0, so L(0) = tau_0 > 0; record i (0-based) sits at local time
// tau_0 + ... + tau_i.
class LocalTimeClock {
  public:
    LocalTimeClock(double alpha, std::vector<double> weights,
                   std::vector<double> record_times, double horizon);

    double alpha() const { return alpha_; }
    const std::vector<double>& weights() const { return weights_; }

    std::size_t jump_count(double t) const;  // l(t)
    double local_time(double t) const;       // L(t)
    // L^{-1}(s) = inf{u : L(u) > s}; +inf once the horizon is exhausted.
    double inverse(double s) const;
    double total_local_time() const;  // L(horizon)

  private:
    double alpha_;
    std::vector<double> weights_;       // tau_0 .. tau_k, k = #records
    std::vector<double> prefix_;        // prefix_[i] = tau_0 + ... + tau_i
    std::vector<double> record_times_;  // strictly increasing
    double horizon_;
};

LocalTimeClock local_time_clock(const std::vector<LadderPoint>& points, double alpha,
                                double horizon, std::uint64_t seed);

// The trivariate ladder (H+, H-, HM) indexed by local time.
struct LadderProcess {
    std::vector<LadderPoint> points;  // local_time assigned, increasing
    double total_local_time;
    bool censored;  // horizon reached before the observation was complete

    // Cumulative coordinates over points with local_time <= s.
    double h_plus(double s) const;
    double h_minus(double s) const;
    int h_mark(double s) const;
};

LadderProcess trivariate_ladder(const std::vector<LadderPoint>& points,
                                const LocalTimeClock& clock);

// e_n = inf{t : HM(t) = 1} in local-time units; nullopt when no mark was
// observed before censoring.
std::optional<double> first_mark_time(const LadderProcess& ladder);

// CSV dump: header "local_time,record_time,overshoot,undershoot,mark".
std::string ladder_to_csv(const LadderProcess& ladder);

}  // namespace fluctlab
