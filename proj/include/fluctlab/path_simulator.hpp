#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluctlab/levy_calculus.hpp"
#include "fluctlab/rng.hpp"

namespace fluctlab {

struct JumpEvent {
    double time;  // in (0, horizon]
    double size;  // > 0
    int mark;     // 0 or 1
};

// Split a jump of size `size` into (overshoot, undershoot) so that
// overshoot + undershoot == size exactly in floating point; at most two
// Sterbenz-exact refinements of the raw overshoot are needed.
void exact_split(double size, double raw_overshoot, double& overshoot, double& undershoot);

// A finite-variation marked path: value(t) = drift * t + sum of sizes of
// events with time <= t. Piecewise linear, cadlag, no negative jumps.
struct MarkedPath {
    double drift;
    double horizon;
    std::vector<JumpEvent> events;
    std::uint64_t seed;

    double value_at(double t) const;
    double supremum_at(double t) const;
};

// Streaming sampler for the same law; sample_marked_path is collect(stream).
// Compound Poisson at rate total_mass, jump sizes iid Λ/total_mass, each mark
// Bernoulli(f(size)) given the size. Fully deterministic given the seed.
class EventStream {
  public:
    EventStream(const ProcessSpec& spec, const MarkRule& mark, std::uint64_t seed);

    // Next event strictly after the current one; false once past `horizon`.
    bool next(double horizon, JumpEvent& out);

    double current_time() const { return time_; }

  private:
    const ProcessSpec* spec_;
    MarkRule mark_;
    double rate_;
    double time_ = 0.0;
    // Single-exponential measures (the hot case) sample sizes inline.
    double exp_rate_ = 0.0;
    SplitMix64 rng_;
};

MarkedPath sample_marked_path(const ProcessSpec& spec, const MarkRule& mark, double horizon,
                              std::uint64_t seed);

// (1/n) path(d_n t): times / d_n, sizes / n, drift d' d_n / n.
MarkedPath rescale_path(const MarkedPath& path, const Scaling& scaling,
                        double target_horizon = -1.0);

// CSV dump: header "time,size,mark", LF terminators, 17 significant digits.
std::string path_to_csv(const MarkedPath& path);

}  // namespace fluctlab
