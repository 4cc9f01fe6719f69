#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluctlab/levy_measure.hpp"

namespace fluctlab {

// Tolerances are module constants; the experiment configuration may override
// any of them by name.
struct Tolerances {
    double psi_quad_rel = 1e-12;     // quadrature for psi / moments
    double eta_abs = 1e-12;          // bisection width for the largest root
    double phi_rel = 1e-10;          // |psi(phi(a)) - a| <= phi_rel * max(1, a)
    double volterra_step = 1e-3;     // marching step for the scale function
    double volterra_check = 1e-4;    // Richardson h vs h/2 discrepancy bound
    double ladder_quad_rel = 1e-8;   // quadrature for the ladder measure
};

inline const Tolerances& default_tolerances() {
    static const Tolerances t{};
    return t;
}

// Spectrally positive, finite variation: drift d' < 0 plus positive jumps.
struct ProcessSpec {
    double drift = -1.0;  // d', strictly negative
    LevyMeasure levy;

    void validate() const;
};

// (1/n) Z(d_n t): drift d' d_n / n, measure d_n Λ(n ·).
ProcessSpec rescaled(const ProcessSpec& spec, const Scaling& s);

// Mark probability as a function of the jump size: constant theta, or the
// capped-linear family f(u) = min(1, slope * u).
class MarkRule {
  public:
    static MarkRule constant(double theta);
    static MarkRule linear_cap(double slope);

    double operator()(double jump_size) const;
    // Rule seen by the rescaled process: u -> f(n u).
    MarkRule rescaled(int n) const;

    bool is_constant() const { return kind_ == Kind::constant; }
    bool is_zero() const { return kind_ == Kind::constant && value_ == 0.0; }
    double constant_value() const { return value_; }
    double cap_slope() const { return value_; }

  private:
    enum class Kind { constant, linear_cap };
    Kind kind_ = Kind::constant;
    double value_ = 0.0;  // theta or slope
};

// psi(lambda) = -d' lambda - ∫ (1 - e^{-lambda r}) Λ(dr).
double laplace_exponent(const ProcessSpec& spec, double lambda,
                        const Tolerances& tol = default_tolerances());

// psi'(0+) = -d' - ∫ r Λ(dr); -inf when the mean jump is infinite.
double psi_prime_at_zero(const ProcessSpec& spec);

// Largest root of psi: 0 iff psi'(0+) >= 0, else the unique positive root.
double eta_root(const ProcessSpec& spec, const Tolerances& tol = default_tolerances());

// Inverse of psi on [eta, inf).
double phi_inverse(const ProcessSpec& spec, double a,
                   const Tolerances& tol = default_tolerances());

// Scale function on an increasing grid of x >= 0, by trapezoidal marching of
// the renewal equation W(x) = -1/d' (1 + ∫_0^x W(x-u) Λ̄(u) du) at steps h
// and h/2; the h^2 discrepancy is the too-coarse check and feeds Richardson
// extrapolation. Requires finite total mass (the march needs Λ̄(0) < inf).
std::vector<double> scale_function(const ProcessSpec& spec, std::span<const double> x_grid,
                                   const Tolerances& tol = default_tolerances());

// psi'(0+) when positive (process drifts to -inf; equals 1/W(inf)), else 0.
double kill_rate(const ProcessSpec& spec);

// One mass contribution of a Λ-atom (z0, m) to the ladder measure: a density
// m e^{-eta (z0 - y)} on 0 < y < z0 carrying the mark bit q with probability
// f(z0); `mass` is its total weight and `y` the source location z0.
struct LadderAtomPart {
    double y;
    int q;
    double mass;
};

// The marked ladder jump measure mu(dy, dq) of (a rescaling of) the process:
//   mu(dy, dq) = ∫_0^∞ dx e^{-eta x} Λ(x + dy) Bernoulli_{f(x+y)}(dq).
// mark/nomark densities carry the density part of Λ only; atom-derived parts
// are listed separately and included by the mu_plus_* evaluations.
class LadderMeasure {
  public:
    LadderMeasure(ProcessSpec spec, MarkRule mark, double eta, double kill,
                  double ladder_quad_rel);

    double mark_density(double y) const;
    double nomark_density(double y) const;
    const std::vector<LadderAtomPart>& atom_parts() const { return atom_parts_; }

    double mu_plus_mass() const { return mu_plus_mass_; }   // may be +inf
    double lambda_rate() const { return lambda_rate_; }     // mu(R+* x {1})
    double kill() const { return kill_; }
    double eta() const { return eta_; }

    // Full mu+ objects, atoms' contributions included.
    double mu_plus_density(double y) const;
    double mu_plus_cdf(double y) const;   // mu+([0,y]) / mu_plus_mass
    double moment(int k) const;           // ∫ y^k mu+(dy)

    // Mass of mu+ restricted to undershoot in [x_lo,x_hi) x overshoot in
    // [y_lo,y_hi), i.e. ∫ dx e^{-eta x} (Λ̄(x+y_lo) - Λ̄(x+y_hi)).
    double joint_cell_mass(double x_lo, double x_hi, double y_lo, double y_hi) const;
    double undershoot_cdf(double x) const;

    // One jump (overshoot y, mark q) from mu / mu_plus_mass. Exact two-stage
    // draw: source size z from the w_eta-weighted Λ, landing point uniform
    // under e^{-eta x} in [0, z), q ~ Bernoulli(f(z)).
    struct Jump {
        double overshoot;
        int mark;
    };
    Jump sample_jump(SplitMix64& rng) const;

    const ProcessSpec& source_spec() const { return spec_; }
    const MarkRule& mark_rule() const { return mark_; }

  private:
    double density_part_density(double y, int with_mark) const;  // 0: no-mark, 1: mark, 2: both

    ProcessSpec spec_;  // already-rescaled coordinates
    MarkRule mark_;     // already-rescaled rule
    double eta_;
    double kill_;
    double quad_rel_;
    std::vector<LadderAtomPart> atom_parts_;
    double mu_plus_mass_;
    double lambda_rate_;
};

// Ladder measure of `spec` (rescaled first when scaling is present, with the
// mark argument f(n(x+y)) as in the rescaled process).
LadderMeasure ladder_measure(const ProcessSpec& spec, const MarkRule& mark,
                             const std::optional<Scaling>& scaling = std::nullopt,
                             const Tolerances& tol = default_tolerances());

enum class Assumption { B1, B2 };

// Limit data of Theorem-4.1 type for a supported analytic family.
struct LimitSpec {
    double b2 = 0.0;            // Gaussian coefficient b^2 of Z
    LevyMeasure limit_measure;  // Λ of Z
    double eta = 0.0;
    double theta = 0.0;         // B.1 mark rate
    double kappa_slope = 0.0;   // B.2 slope of f at 0
    double rho = 0.0;           // kappa * b^2
    double kill = 0.0;          // 1/W(inf), 0 unless Z drifts to -inf
    double c = 0.0;             // drift coefficient of psi under h(u) = 1 ∧ u
};

// Analytic n-indexed family: base process with d_n = c n^2 (or the drift-only
// degenerate family), marks theta_n = theta_bar / n under B.1 or
// f_n(u) = min(1, kappa_bar u / n) under B.2.
struct ProcessFamily {
    ProcessSpec base;
    double dn_coefficient = 1.0;  // d_n = dn_coefficient * n^2
    Assumption assumption = Assumption::B1;
    double theta_bar = 0.0;   // B.1: theta_n = theta_bar / n
    double kappa_bar = 0.0;   // B.2: f_n = linear_cap(kappa_bar / n)
    bool drift_only = false;  // Λ = 0 degenerate family (d_n = n)

    Scaling scaling(int n) const;
    MarkRule mark_rule(int n) const;
    ProcessSpec member(int n) const;  // rescaled spec at index n
};

// Closed-form limit parameters for the supported presets: drift-only, and
// critical single-exponential Λ with d_n = c n^2. Anything else throws a
// not-implemented usage error naming the supported presets.
LimitSpec limit_parameters(const ProcessFamily& family);

}  // namespace fluctlab
