#pragma once

#include <cmath>
#include <cstdint>

namespace fluctlab {

// SplitMix64, the project-wide counter-based 64-bit generator. The state
// walks a Weyl sequence (counter += golden gamma) and every output is a
// bijective finalizer of the counter, so a stream is a pure function of
// (seed, call index).
//
// Stream-split contract used throughout:
//   * replicate i of a Monte Carlo run uses seed_i = base ^ i,
//   * the orchestrator derives per-(n, replicate) seeds as
//     base ^ mix64((n << 32) | replicate),
//   * auxiliary streams attached to one replicate (e.g. the local-time
//     clock) use seed ^ STREAM_* constants below.
//
// Reports record the generator identity as "splitmix64".
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]: 53-bit mantissa, never returns 0 so -log is finite.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0,1).
    double next_unit_co() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

    bool next_bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return next_unit_co() < p;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Multiply-shift; bias is < 2^-64 per draw, irrelevant at our scales.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

  private:
    std::uint64_t state_;
};

// Finalizer alone, used to spread structured indices into seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for replicate i of a stream family rooted at `base`.
inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t i) {
    return base ^ i;
}

// Seed for (n, replicate) grid cells; adding replicates never perturbs
// existing ones and distinct n never collide.
inline std::uint64_t grid_seed(std::uint64_t base, std::uint64_t n, std::uint64_t replicate) {
    return base ^ mix64((n << 32) ^ replicate);
}

// Sub-stream tags hung off one replicate seed.
inline constexpr std::uint64_t STREAM_PATH = 0x0000000000000000ULL;
inline constexpr std::uint64_t STREAM_CLOCK = 0xC2B2AE3D27D4EB4FULL;
inline constexpr std::uint64_t STREAM_BOOTSTRAP = 0x165667B19E3779F9ULL;

inline const char* rng_identity() { return "splitmix64"; }

}  // namespace fluctlab
