#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fluctlab/path_simulator.hpp"

namespace fluctlab {

// S(j) = path(j * step), step = 1/k; exact on the piecewise-linear path.
struct WalkSample {
    double step;
    std::vector<double> values;  // S(0) = 0, S(1), ...
    std::uint64_t source_seed;
};

WalkSample discretize_path(const MarkedPath& path, int k);

// A replicable law of walks: replicate i is sampled deterministically.
using WalkLaw = std::function<WalkSample(std::uint64_t replicate)>;

struct FristedtEstimate {
    double alpha;
    double standard_error;  // delta-method from the per-replicate sums
    double tail_bound;      // analytic bound on the truncated part of the sum
    int k_max;
};

// alpha_n = exp{ sum_{k>=1} (1/k) e^{-k/n} P(S(k) > 0) }, the series truncated
// at k_max with the analytic tail bound e^{-K/n} / (K (1 - e^{-1/n})).
// Each P(S(k) > 0) is estimated over `replicates` walks; the standard error
// of alpha is propagated from the iid per-replicate sums.
FristedtEstimate fristedt_alpha(const WalkLaw& law, int steps_per_unit, int k_max,
                                std::uint64_t replicates, double se_target = 0.0);

struct WalkLadderEstimate {
    double exponent;         // -log mean of e^{-delta T(1) - beta G(1)}
    double standard_error;   // on the exponent, delta method
    double censored_fraction;
};

// Path-law driven walk ladder, streamed off the jump events so the grid is
// never materialized. Strict ascending ladder epochs
//   t(j+1) = min{ i > t(j) : S(i) > S(t(j)) },
// Exp(alpha) weights a_1, a_2, ... attached to the ladder points, and the
// Poisson-subordinated pair (T, G) = (t ∘ N, Sbar ∘ t ∘ N) evaluated at s = 1:
// T(1) = t(N_1)/k in path time with N_1 = #{j : a_1 + ... + a_j <= 1}
// (N_1 = 0 gives T(1) = 0, G(1) = 0). Walks whose ladder exhausts the horizon
// before the N_1-th record contribute 0 to the killed expectation.
WalkLadderEstimate walk_ladder_exponent(const ProcessSpec& spec, const MarkRule& mark,
                                        double horizon, int steps_per_unit, double alpha,
                                        double delta, double beta, std::uint64_t replicates,
                                        std::uint64_t seed_base,
                                        double max_censored_fraction = 0.05);

// All strict-record increments of the k-discretized walk of one path
// (heights measured on the grid); used to compare against the continuous
// ladder's overshoots.
std::vector<double> walk_record_increments(const MarkedPath& path, int k);

}  // namespace fluctlab
