#pragma once

#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "fluctlab/rng.hpp"

namespace fluctlab {

inline constexpr double kInfiniteMass = std::numeric_limits<double>::infinity();

struct JumpAtom {
    double location;  // > 0
    double mass;      // > 0
};

// Density families. Each is closed under the rescaling r -> r/n, mass -> d_n * mass.
struct ExponentialJumps {
    double mass;  // total mass of this component
    double rate;  // density mass * rate * exp(-rate r)
};

struct UniformJumps {
    double mass;
    double lo, hi;  // density mass/(hi-lo) on (lo, hi]
};

struct PowerCutoffJumps {
    double scale;     // density scale * r^-exponent for r > cutoff
    double exponent;  // > 1; if cutoff == 0 additionally < 2
    double cutoff;    // >= 0
};

using DensityComponent = std::variant<ExponentialJumps, UniformJumps, PowerCutoffJumps>;

struct Scaling {
    int n = 1;
    double d_n = 1.0;
    double alpha() const { return d_n / n; }  // local-time clock rate d_n/n
};

// A sigma-finite measure on (0,inf) with integrable 1 ∧ r: atoms plus a
// piecewise-analytic density. Total mass may be +inf (power cutoff at 0),
// in which case sampling-facing operations reject the measure.
class LevyMeasure {
  public:
    LevyMeasure() = default;

    static LevyMeasure zero() { return LevyMeasure(); }
    static LevyMeasure exponential(double mass, double rate);
    static LevyMeasure uniform(double mass, double lo, double hi);
    static LevyMeasure power_cutoff(double scale, double exponent, double cutoff);
    static LevyMeasure atom(double location, double mass);

    LevyMeasure& add_atom(double location, double mass);
    LevyMeasure& add_component(const DensityComponent& c);

    bool is_zero() const { return atoms_.empty() && components_.empty(); }
    bool has_finite_mass() const;

    double total_mass() const;     // may be +inf
    double mean_jump() const;      // ∫ r Λ(dr), may be +inf
    double second_moment() const;  // ∫ r^2 Λ(dr), may be +inf

    // ∫ (1 - e^{-lambda r}) Λ(dr); closed form per family where available,
    // adaptive quadrature otherwise.
    double one_minus_exp_integral(double lambda, double rel_tol = 1e-12) const;

    // Λ((u, ∞)).
    double tail(double u) const;

    // Density part evaluated pointwise (atoms excluded).
    double density(double r) const;

    // ∫ g dΛ for bounded continuous g with g(0+) = 0 fast enough that the
    // integral converges (this is only used with such test functions).
    double integrate(const std::function<double(double)>& g, double rel_tol = 1e-10) const;

    // One jump from the normalized measure Λ / total_mass. Requires finite mass.
    double sample_jump(SplitMix64& rng) const;

    // d_n Λ(n ·): atoms (r, m) -> (r/n, d_n m), densities transformed in family.
    LevyMeasure rescaled(const Scaling& s) const;

    const std::vector<JumpAtom>& atoms() const { return atoms_; }
    const std::vector<DensityComponent>& components() const { return components_; }

  private:
    std::vector<JumpAtom> atoms_;
    std::vector<DensityComponent> components_;
};

}  // namespace fluctlab
