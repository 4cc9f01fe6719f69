#include "fluctlab/levy_measure.hpp"

#include <algorithm>
#include <cmath>

#include "fluctlab/errors.hpp"
#include "fluctlab/quadrature.hpp"

namespace fluctlab {

namespace {

struct MassVisitor {
    double operator()(const ExponentialJumps& c) const { return c.mass; }
    double operator()(const UniformJumps& c) const { return c.mass; }
    double operator()(const PowerCutoffJumps& c) const {
        if (c.cutoff == 0.0) return kInfiniteMass;
        return c.scale * std::pow(c.cutoff, 1.0 - c.exponent) / (c.exponent - 1.0);
    }
};

struct MeanVisitor {
    double operator()(const ExponentialJumps& c) const { return c.mass / c.rate; }
    double operator()(const UniformJumps& c) const { return c.mass * 0.5 * (c.lo + c.hi); }
    double operator()(const PowerCutoffJumps& c) const {
        // ∫_eps^∞ r^{1-beta} dr, finite iff beta > 2.
        if (c.exponent <= 2.0) return kInfiniteMass;
        return c.scale * std::pow(c.cutoff, 2.0 - c.exponent) / (c.exponent - 2.0);
    }
};

struct SecondMomentVisitor {
    double operator()(const ExponentialJumps& c) const { return 2.0 * c.mass / (c.rate * c.rate); }
    double operator()(const UniformJumps& c) const {
        return c.mass * (c.hi * c.hi + c.hi * c.lo + c.lo * c.lo) / 3.0;
    }
    double operator()(const PowerCutoffJumps& c) const {
        if (c.exponent <= 3.0) return kInfiniteMass;
        return c.scale * std::pow(c.cutoff, 3.0 - c.exponent) / (c.exponent - 3.0);
    }
};

void check_positive(bool ok, const char* what) {
    if (!ok) throw usage_error(std::string("invalid Levy measure: ") + what);
}

}  // namespace

LevyMeasure LevyMeasure::exponential(double mass, double rate) {
    check_positive(mass > 0.0 && rate > 0.0, "exponential family needs mass > 0, rate > 0");
    LevyMeasure m;
    m.components_.push_back(ExponentialJumps{mass, rate});
    return m;
}

LevyMeasure LevyMeasure::uniform(double mass, double lo, double hi) {
    check_positive(mass > 0.0 && hi > lo && lo >= 0.0, "uniform family needs mass > 0, 0 <= lo < hi");
    LevyMeasure m;
    m.components_.push_back(UniformJumps{mass, lo, hi});
    return m;
}

LevyMeasure LevyMeasure::power_cutoff(double scale, double exponent, double cutoff) {
    check_positive(scale > 0.0 && cutoff >= 0.0, "power family needs scale > 0, cutoff >= 0");
    check_positive(exponent > 1.0, "power family needs exponent > 1 (tail integrability)");
    if (cutoff == 0.0)
        check_positive(exponent < 2.0, "power family with cutoff 0 needs exponent < 2");
    LevyMeasure m;
    m.components_.push_back(PowerCutoffJumps{scale, exponent, cutoff});
    return m;
}

LevyMeasure LevyMeasure::atom(double location, double mass) {
    check_positive(location > 0.0 && mass > 0.0, "atom needs location > 0, mass > 0");
    LevyMeasure m;
    m.atoms_.push_back(JumpAtom{location, mass});
    return m;
}

LevyMeasure& LevyMeasure::add_atom(double location, double mass) {
    check_positive(location > 0.0 && mass > 0.0, "atom needs location > 0, mass > 0");
    atoms_.push_back(JumpAtom{location, mass});
    return *this;
}

LevyMeasure& LevyMeasure::add_component(const DensityComponent& c) {
    components_.push_back(c);
    return *this;
}

bool LevyMeasure::has_finite_mass() const { return std::isfinite(total_mass()); }

double LevyMeasure::total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.mass;
    for (const auto& c : components_) m += std::visit(MassVisitor{}, c);
    return m;
}

double LevyMeasure::mean_jump() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.location * a.mass;
    for (const auto& c : components_) m += std::visit(MeanVisitor{}, c);
    return m;
}

double LevyMeasure::second_moment() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.location * a.location * a.mass;
    for (const auto& c : components_) m += std::visit(SecondMomentVisitor{}, c);
    return m;
}

double LevyMeasure::one_minus_exp_integral(double lambda, double rel_tol) const {
    if (lambda == 0.0) return 0.0;
    double total = 0.0;
    for (const auto& a : atoms_) total += a.mass * (-std::expm1(-lambda * a.location));
    for (const auto& c : components_) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            total += e->mass * lambda / (lambda + e->rate);
        } else if (const auto* u = std::get_if<UniformJumps>(&c)) {
            const double width = u->hi - u->lo;
            total += u->mass *
                     (1.0 - (std::exp(-lambda * u->lo) - std::exp(-lambda * u->hi)) /
                                (lambda * width));
        } else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            if (p.cutoff == 0.0) {
                // ∫_0^∞ (1-e^{-λr}) r^{-β} dr = λ^{β-1} Γ(2-β)/(β-1), 1 < β < 2.
                total += p.scale * std::pow(lambda, p.exponent - 1.0) *
                         std::tgamma(2.0 - p.exponent) / (p.exponent - 1.0);
            } else {
                auto f = [&](double r) {
                    return -std::expm1(-lambda * r) * p.scale * std::pow(r, -p.exponent);
                };
                total += integrate_to_infinity(f, p.cutoff, rel_tol);
            }
        }
    }
    return total;
}

double LevyMeasure::tail(double u) const {
    double t = 0.0;
    for (const auto& a : atoms_)
        if (a.location > u) t += a.mass;
    for (const auto& c : components_) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            t += u <= 0.0 ? e->mass : e->mass * std::exp(-e->rate * u);
        } else if (const auto* un = std::get_if<UniformJumps>(&c)) {
            if (u < un->lo)
                t += un->mass;
            else if (u < un->hi)
                t += un->mass * (un->hi - u) / (un->hi - un->lo);
        } else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            const double from = std::max(u, p.cutoff);
            t += p.scale * std::pow(from, 1.0 - p.exponent) / (p.exponent - 1.0);
        }
    }
    return t;
}

double LevyMeasure::density(double r) const {
    if (r <= 0.0) return 0.0;
    double d = 0.0;
    for (const auto& c : components_) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            d += e->mass * e->rate * std::exp(-e->rate * r);
        } else if (const auto* u = std::get_if<UniformJumps>(&c)) {
            if (r > u->lo && r <= u->hi) d += u->mass / (u->hi - u->lo);
        } else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            if (r > p.cutoff) d += p.scale * std::pow(r, -p.exponent);
        }
    }
    return d;
}

double LevyMeasure::integrate(const std::function<double(double)>& g, double rel_tol) const {
    double total = 0.0;
    for (const auto& a : atoms_) total += a.mass * g(a.location);
    for (const auto& c : components_) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            auto f = [&](double r) { return g(r) * e->mass * e->rate * std::exp(-e->rate * r); };
            total += integrate_to_infinity(f, 0.0, rel_tol);
        } else if (const auto* u = std::get_if<UniformJumps>(&c)) {
            auto f = [&](double r) { return g(r) * u->mass / (u->hi - u->lo); };
            total += fluctlab::integrate(f, u->lo, u->hi, rel_tol);
        } else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            auto f = [&](double r) { return g(r) * p.scale * std::pow(r, -p.exponent); };
            total += integrate_to_infinity(f, p.cutoff, rel_tol);
        }
    }
    return total;
}

double LevyMeasure::sample_jump(SplitMix64& rng) const {
    const double mass = total_mass();
    if (!std::isfinite(mass) || mass <= 0.0)
        throw unsupported_measure("sample_jump needs 0 < total mass < inf");
    double pick = rng.next_unit_co() * mass;
    for (const auto& a : atoms_) {
        if (pick < a.mass) return a.location;
        pick -= a.mass;
    }
    if (components_.empty()) return atoms_.back().location;  // rounding spill
    std::size_t idx = 0;
    for (; idx + 1 < components_.size(); ++idx) {
        const double cm = std::visit(MassVisitor{}, components_[idx]);
        if (pick < cm) break;
        pick -= cm;
    }
    const DensityComponent& c = components_[idx];
    const double u = rng.next_unit_co();
    if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
        return -std::log1p(-u) / e->rate;
    }
    if (const auto* un = std::get_if<UniformJumps>(&c)) {
        return un->lo + (un->hi - un->lo) * u;
    }
    const auto& p = std::get<PowerCutoffJumps>(c);
    return p.cutoff * std::pow(1.0 - u, -1.0 / (p.exponent - 1.0));
}

LevyMeasure LevyMeasure::rescaled(const Scaling& s) const {
    LevyMeasure out;
    const double n = static_cast<double>(s.n);
    for (const auto& a : atoms_) out.atoms_.push_back({a.location / n, s.d_n * a.mass});
    for (const auto& c : components_) {
        if (const auto* e = std::get_if<ExponentialJumps>(&c)) {
            out.components_.push_back(ExponentialJumps{s.d_n * e->mass, n * e->rate});
        } else if (const auto* u = std::get_if<UniformJumps>(&c)) {
            out.components_.push_back(UniformJumps{s.d_n * u->mass, u->lo / n, u->hi / n});
        } else {
            const auto& p = std::get<PowerCutoffJumps>(c);
            out.components_.push_back(PowerCutoffJumps{
                s.d_n * p.scale * std::pow(n, 1.0 - p.exponent), p.exponent, p.cutoff / n});
        }
    }
    return out;
}

}  // namespace fluctlab
