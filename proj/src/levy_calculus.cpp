#include "fluctlab/levy_calculus.hpp"

#include <algorithm>
#include <cmath>

#include "fluctlab/errors.hpp"
#include "fluctlab/quadrature.hpp"

namespace fluctlab {

void ProcessSpec::validate() const {
    if (!(drift < 0.0)) throw usage_error("ProcessSpec: drift d' must be strictly negative");
}

ProcessSpec rescaled(const ProcessSpec& spec, const Scaling& s) {
    ProcessSpec out;
    out.drift = spec.drift * s.d_n / s.n;
    out.levy = spec.levy.rescaled(s);
    return out;
}

MarkRule MarkRule::constant(double theta) {
    if (theta < 0.0 || theta > 1.0) throw usage_error("MarkRule: theta must lie in [0,1]");
    MarkRule r;
    r.kind_ = Kind::constant;
    r.value_ = theta;
    return r;
}

MarkRule MarkRule::linear_cap(double slope) {
    if (!(slope >= 0.0)) throw usage_error("MarkRule: slope must be >= 0");
    MarkRule r;
    r.kind_ = Kind::linear_cap;
    r.value_ = slope;
    return r;
}

double MarkRule::operator()(double jump_size) const {
    if (kind_ == Kind::constant) return value_;
    return std::min(1.0, value_ * jump_size);
}

MarkRule MarkRule::rescaled(int n) const {
    if (kind_ == Kind::constant) return *this;
    return linear_cap(value_ * n);
}

double laplace_exponent(const ProcessSpec& spec, double lambda, const Tolerances& tol) {
    spec.validate();
    if (lambda < 0.0) throw usage_error("laplace_exponent: lambda must be >= 0");
    return -spec.drift * lambda - spec.levy.one_minus_exp_integral(lambda, tol.psi_quad_rel);
}

double psi_prime_at_zero(const ProcessSpec& spec) {
    const double mean = spec.levy.mean_jump();
    if (!std::isfinite(mean)) return -kInfiniteMass;
    return -spec.drift - mean;
}

double eta_root(const ProcessSpec& spec, const Tolerances& tol) {
    spec.validate();
    if (psi_prime_at_zero(spec) >= 0.0) return 0.0;
    // Supercritical: unique positive root. psi(0)=0, psi < 0 just right of 0,
    // psi -> +inf; bracket by doubling, then bisect (robust near the critical
    // double root, where Newton is not).
    double hi = 1.0;
    while (laplace_exponent(spec, hi, tol) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw numeric_failure("eta_root: bracket expansion failed");
    }
    double lo = 0.0;  // psi(lo) <= 0 invariant
    while (hi - lo > tol.eta_abs) {
        const double mid = 0.5 * (lo + hi);
        if (laplace_exponent(spec, mid, tol) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double phi_inverse(const ProcessSpec& spec, double a, const Tolerances& tol) {
    spec.validate();
    if (a < 0.0) throw usage_error("phi_inverse: argument must be >= 0");
    const double eta = eta_root(spec, tol);
    if (a == 0.0) return eta;
    double lo = eta;
    double hi = std::max(1.0, 2.0 * eta);
    while (laplace_exponent(spec, hi, tol) < a) {
        hi *= 2.0;
        if (hi > 1e15) throw numeric_failure("phi_inverse: bracket expansion failed");
    }
    const double target = tol.phi_rel * std::max(1.0, a);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = laplace_exponent(spec, mid, tol) - a;
        if (std::abs(v) <= target) return mid;
        if (v < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// March W on a uniform grid of step h up to x_max. W(0) = -1/d' exactly.
std::vector<double> volterra_march(const ProcessSpec& spec, double h, double x_max) {
    const double w0 = -1.0 / spec.drift;
    const std::size_t steps = static_cast<std::size_t>(std::ceil(x_max / h - 1e-9));
    std::vector<double> tail_grid(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) tail_grid[j] = spec.levy.tail(j * h);
    std::vector<double> w(steps + 1);
    w[0] = w0;
    const double c = w0 * h;
    const double diag = 1.0 - 0.5 * c * tail_grid[0];
    if (diag <= 0.0)
        throw refinement_needed("scale_function: step too coarse for this jump rate");
    for (std::size_t k = 1; k <= steps; ++k) {
        double conv = 0.5 * w[0] * tail_grid[k];
        for (std::size_t j = 1; j < k; ++j) conv += w[k - j] * tail_grid[j];
        w[k] = (w0 + c * conv) / diag;
    }
    return w;
}

double interpolate(const std::vector<double>& w, double h, double x) {
    const double pos = x / h;
    const std::size_t j = std::min(static_cast<std::size_t>(pos), w.size() - 2);
    const double frac = pos - static_cast<double>(j);
    return w[j] + frac * (w[j + 1] - w[j]);
}

}  // namespace

std::vector<double> scale_function(const ProcessSpec& spec, std::span<const double> x_grid,
                                   const Tolerances& tol) {
    spec.validate();
    if (x_grid.empty()) return {};
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        if (x_grid[i] < 0.0 || (i > 0 && x_grid[i] <= x_grid[i - 1]))
            throw usage_error("scale_function: grid must be increasing and nonnegative");
    }
    if (!spec.levy.has_finite_mass())
        throw unsupported_measure("scale_function: marching needs a finite-mass measure");

    const double w0 = -1.0 / spec.drift;
    const double x_max = x_grid.back();
    if (spec.levy.is_zero() || x_max == 0.0) {
        std::vector<double> out(x_grid.size(), w0);
        return out;
    }

    const double h = tol.volterra_step;
    const auto coarse = volterra_march(spec, h, x_max);
    auto fine = volterra_march(spec, 0.5 * h, x_max);
    // The composite trapezoidal march has a clean h^2 error expansion, so the
    // h vs h/2 discrepancy is both the too-coarse detector and the input to
    // Richardson extrapolation on the shared grid points.
    double disc = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k)
        disc = std::max(disc, std::abs(coarse[k] - fine[2 * k]) / std::max(1.0, fine[2 * k]));
    if (disc > tol.volterra_check)
        throw refinement_needed("scale_function: step " + std::to_string(h) +
                                " too coarse, h vs h/2 discrepancy " + std::to_string(disc));
    std::vector<double> corr(fine.size(), 0.0);
    for (std::size_t k = 0; k < coarse.size(); ++k)
        corr[2 * k] = (fine[2 * k] - coarse[k]) / 3.0;
    for (std::size_t j = 1; j < fine.size(); j += 2)
        corr[j] = j + 1 < corr.size() ? 0.5 * (corr[j - 1] + corr[j + 1]) : corr[j - 1];
    for (std::size_t j = 0; j < fine.size(); ++j) fine[j] += corr[j];

    std::vector<double> out(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        out[i] = x_grid[i] == 0.0 ? w0 : interpolate(fine, 0.5 * h, x_grid[i]);
    return out;
}

double kill_rate(const ProcessSpec& spec) {
    spec.validate();
    const double slope = psi_prime_at_zero(spec);
    return slope > 0.0 ? slope : 0.0;
}

// ---------------------------------------------------------------------------
// Ladder measure
// ---------------------------------------------------------------------------

namespace {

// ∫_0^z e^{-eta x} dx.
double eta_window(double eta, double z) {
    if (eta == 0.0) return z;
    return -std::expm1(-eta * z) / eta;
}

}  // namespace

LadderMeasure::LadderMeasure(ProcessSpec spec, MarkRule mark, double eta, double kill,
                             double ladder_quad_rel)
    : spec_(std::move(spec)),
      mark_(mark),
      eta_(eta),
      kill_(kill),
      quad_rel_(ladder_quad_rel) {
    for (const auto& a : spec_.levy.atoms()) {
        const double w = a.mass * eta_window(eta_, a.location);
        const double p = mark_(a.location);
        if (p > 0.0) atom_parts_.push_back({a.location, 1, w * p});
        if (p < 1.0) atom_parts_.push_back({a.location, 0, w * (1.0 - p)});
    }
    // mu+ mass = ∫ w_eta(z) Λ(dz); lambda = ∫ f(z) w_eta(z) Λ(dz). The
    // integrands grow at most linearly, so the mass is finite iff ∫ z Λ(dz)
    // near infinity is (eta = 0) -- the power family may make it infinite.
    const double mean = spec_.levy.mean_jump();
    if (eta_ == 0.0 && !std::isfinite(mean)) {
        mu_plus_mass_ = kInfiniteMass;
        lambda_rate_ = mark_.is_zero() ? 0.0 : kInfiniteMass;
        return;
    }
    mu_plus_mass_ = spec_.levy.integrate(
        [this](double z) { return eta_window(eta_, z); }, quad_rel_);
    if (mark_.is_zero()) {
        lambda_rate_ = 0.0;
    } else if (mark_.is_constant()) {
        lambda_rate_ = mark_.constant_value() * mu_plus_mass_;
    } else {
        lambda_rate_ = spec_.levy.integrate(
            [this](double z) { return mark_(z) * eta_window(eta_, z); }, quad_rel_);
    }
}

double LadderMeasure::density_part_density(double y, int with_mark) const {
    if (y <= 0.0) return 0.0;
    // e^{eta y} ∫_y^∞ e^{-eta z} weight(z) λ(z) dz
    auto weight = [&](double z) -> double {
        switch (with_mark) {
            case 0: return 1.0 - mark_(z);
            case 1: return mark_(z);
            default: return 1.0;
        }
    };
    bool closed_ok = true;
    double total = 0.0;
    for (const auto& c : spec_.levy.components()) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            if (mark_.is_constant()) {
                const double w = with_mark == 2
                                     ? 1.0
                                     : (with_mark == 1 ? mark_.constant_value()
                                                       : 1.0 - mark_.constant_value());
                total += w * e->mass * e->rate / (eta_ + e->rate) * std::exp(-e->rate * y);
                continue;
            }
        }
        closed_ok = false;
        break;
    }
    if (closed_ok) return total;
    auto f = [&](double z) {
        return std::exp(-eta_ * (z - y)) * weight(z) * spec_.levy.density(z);
    };
    return integrate_to_infinity(f, y, quad_rel_);
}

double LadderMeasure::mark_density(double y) const { return density_part_density(y, 1); }
double LadderMeasure::nomark_density(double y) const { return density_part_density(y, 0); }

double LadderMeasure::mu_plus_density(double y) const {
    double d = density_part_density(y, 2);
    for (const auto& a : spec_.levy.atoms())
        if (y > 0.0 && y < a.location) d += a.mass * std::exp(-eta_ * (a.location - y));
    return d;
}

double LadderMeasure::mu_plus_cdf(double y) const {
    if (y <= 0.0) return 0.0;
    if (!std::isfinite(mu_plus_mass_))
        throw unsupported_measure("mu_plus_cdf: infinite ladder mass");
    // mu+([0,y]) = ∫ Λ(dz) ∫_{(z-y)∨0}^{z} e^{-eta x} dx; the measure's
    // integrate() covers atoms and density components alike.
    const double m = spec_.levy.integrate(
        [&](double z) {
            const double lo = std::max(z - y, 0.0);
            return eta_window(eta_, z) - eta_window(eta_, lo);
        },
        quad_rel_);
    return std::min(1.0, m / mu_plus_mass_);
}

double LadderMeasure::moment(int k) const {
    // ∫ y^k mu+(dy) = ∫ Λ(dz) ∫_0^z e^{-eta x} (z-x)^k dx
    auto inner = [&](double z) {
        if (eta_ == 0.0) return std::pow(z, k + 1) / (k + 1);
        return integrate([&](double x) { return std::exp(-eta_ * x) * std::pow(z - x, k); },
                         0.0, z, quad_rel_);
    };
    double m = spec_.levy.integrate(inner, quad_rel_);
    return m;
}

double LadderMeasure::joint_cell_mass(double x_lo, double x_hi, double y_lo, double y_hi) const {
    auto f = [&](double x) {
        return std::exp(-eta_ * x) *
               (spec_.levy.tail(x + y_lo) - spec_.levy.tail(x + y_hi));
    };
    if (std::isfinite(x_hi)) return integrate(f, x_lo, x_hi, quad_rel_);
    return integrate_to_infinity(f, x_lo, quad_rel_);
}

double LadderMeasure::undershoot_cdf(double x) const {
    if (x <= 0.0) return 0.0;
    auto f = [&](double u) { return std::exp(-eta_ * u) * spec_.levy.tail(u); };
    return integrate(f, 0.0, x, quad_rel_) / mu_plus_mass_;
}

namespace {

// Draw z from the size-biased density z λ(z) / ∫ z λ over the density part.
double sample_size_biased(const LevyMeasure& levy, SplitMix64& rng) {
    double total = 0.0;
    std::vector<double> means;
    means.reserve(levy.components().size());
    for (const auto& c : levy.components()) {
        double m;
        if (const auto* e = std::get_if<ExponentialJumps>(&c))
            m = e->mass / e->rate;
        else if (const auto* u = std::get_if<UniformJumps>(&c))
            m = u->mass * 0.5 * (u->lo + u->hi);
        else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            if (p.exponent <= 2.0)
                throw unsupported_measure("size-biased draw needs exponent > 2");
            m = p.scale * std::pow(p.cutoff, 2.0 - p.exponent) / (p.exponent - 2.0);
        }
        means.push_back(m);
        total += m;
    }
    double pick = rng.next_unit_co() * total;
    std::size_t idx = 0;
    for (; idx + 1 < means.size(); ++idx) {
        if (pick < means[idx]) break;
        pick -= means[idx];
    }
    const auto& c = levy.components()[idx];
    if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
        // z λ(z) with exponential λ is Gamma(2, rate).
        return rng.next_exponential(e->rate) + rng.next_exponential(e->rate);
    }
    const double u = rng.next_unit_co();
    if (const auto* un = std::get_if<UniformJumps>(&c)) {
        // density ∝ z on (lo, hi].
        const double lo2 = un->lo * un->lo;
        return std::sqrt(lo2 + u * (un->hi * un->hi - lo2));
    }
    const auto& p = std::get<PowerCutoffJumps>(c);
    // density ∝ z^{1-exponent} on (cutoff, ∞), exponent > 2.
    return p.cutoff * std::pow(1.0 - u, -1.0 / (p.exponent - 2.0));
}

}  // namespace

LadderMeasure::Jump LadderMeasure::sample_jump(SplitMix64& rng) const {
    if (!std::isfinite(mu_plus_mass_) || mu_plus_mass_ <= 0.0)
        throw unsupported_measure("ladder sample_jump needs 0 < mu+ mass < inf");
    // Stage 1: source size z from the w_eta-weighted measure.
    double atom_total = 0.0;
    for (const auto& p : atom_parts_) atom_total += p.mass;
    double z;
    double pick = rng.next_unit_co() * mu_plus_mass_;
    if (pick < atom_total) {
        double acc = 0.0;
        z = atom_parts_.back().y;
        for (const auto& p : atom_parts_) {
            acc += p.mass;
            if (pick < acc) {
                z = p.y;
                break;
            }
        }
    } else {
        // Density part: propose from the size-biased density z λ(z), accept
        // with probability w_eta(z) / z = (1 - e^{-eta z})/(eta z) <= 1.
        for (;;) {
            z = sample_size_biased(spec_.levy, rng);
            if (eta_ == 0.0) break;
            if (rng.next_unit_co() < eta_window(eta_, z) / z) break;
        }
    }
    // Stage 2: landing point x under e^{-eta x} on [0, z), overshoot z - x.
    double x;
    if (eta_ == 0.0) {
        x = z * rng.next_unit_co();
    } else {
        const double u = rng.next_unit_co();
        x = -std::log1p(u * std::expm1(-eta_ * z)) / eta_;
    }
    const int q = rng.next_bernoulli(mark_(z)) ? 1 : 0;
    return {z - x, q};
}

// ---------------------------------------------------------------------------

LadderMeasure ladder_measure(const ProcessSpec& spec, const MarkRule& mark,
                             const std::optional<Scaling>& scaling, const Tolerances& tol) {
    spec.validate();
    ProcessSpec s = spec;
    MarkRule m = mark;
    if (scaling) {
        s = rescaled(spec, *scaling);
        m = mark.rescaled(scaling->n);
    }
    const double eta = eta_root(s, tol);
    const double kill = kill_rate(s);
    return LadderMeasure(std::move(s), m, eta, kill, tol.ladder_quad_rel);
}

Scaling ProcessFamily::scaling(int n) const {
    if (drift_only) return Scaling{n, static_cast<double>(n)};
    return Scaling{n, dn_coefficient * n * static_cast<double>(n)};
}

MarkRule ProcessFamily::mark_rule(int n) const {
    if (assumption == Assumption::B1) return MarkRule::constant(theta_bar / n);
    return MarkRule::linear_cap(kappa_bar / n);
}

ProcessSpec ProcessFamily::member(int n) const { return rescaled(base, scaling(n)); }

LimitSpec limit_parameters(const ProcessFamily& family) {
    static const char* kSupported =
        "supported families: drift-only (Levy measure 0, d_n = n); "
        "critical single-exponential Levy measure with d_n = c n^2";
    LimitSpec out;
    if (family.drift_only) {
        if (!family.base.levy.is_zero())
            throw usage_error(std::string("limit_parameters: drift-only family must have "
                                          "zero Levy measure; ") + kSupported);
        out.c = -family.base.drift;  // psi(lambda) = c lambda, constant in n
        return out;
    }
    const auto& comps = family.base.levy.components();
    if (comps.size() != 1 || !family.base.levy.atoms().empty() ||
        !std::holds_alternative<ExponentialJumps>(comps[0]))
        throw usage_error(std::string("limit_parameters: not implemented for this family; ") +
                          kSupported);
    const auto& e = std::get<ExponentialJumps>(comps[0]);
    const double slope = psi_prime_at_zero(family.base);
    if (std::abs(slope) > 1e-12)
        throw usage_error(std::string("limit_parameters: family must be critical "
                                      "(psi'(0+) = 0); ") + kSupported);
    // psi_n~(lambda) = c n^2 psi(lambda/n) -> (c |d'| / rate) lambda^2.
    out.b2 = 2.0 * family.dn_coefficient * (-family.base.drift) / e.rate;
    out.limit_measure = LevyMeasure::zero();
    out.eta = 0.0;
    out.kill = 0.0;  // critical limit oscillates
    if (family.assumption == Assumption::B1) {
        out.theta = family.dn_coefficient * family.theta_bar;
    } else {
        out.kappa_slope = family.kappa_bar;
        out.rho = out.kappa_slope * out.b2;
    }
    return out;
}

}  // namespace fluctlab
