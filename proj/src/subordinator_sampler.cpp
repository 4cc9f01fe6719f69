#include "fluctlab/subordinator_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fluctlab/errors.hpp"
#include "fluctlab/quadrature.hpp"

namespace fluctlab {

double SubordinatorSpec::jump_mass() const {
    return jump_measure ? jump_measure->mu_plus_mass() : 0.0;
}

void SubordinatorSpec::validate() const {
    if (drift_plus < 0.0 || independent_mark_rate < 0.0 || kill < 0.0)
        throw usage_error("SubordinatorSpec: drift, mark rate and kill must be >= 0");
    if (jump_measure && !std::isfinite(jump_measure->mu_plus_mass()))
        throw unsupported_measure("sample_subordinator: infinite jump mass");
}

double SubordinatorPath::h_plus(double t) const {
    double v = drift_plus * std::min(t, kill_time);
    for (const auto& e : events) {
        if (e.local_time > t) break;
        v += e.dh_plus;
    }
    return v;
}

int SubordinatorPath::h_mark(double t) const {
    int v = 0;
    for (const auto& e : events) {
        if (e.local_time > t) break;
        v += e.dh_mark;
    }
    return v;
}

SubordinatorPath sample_subordinator(const SubordinatorSpec& spec, double horizon,
                                     std::uint64_t seed) {
    spec.validate();
    if (!(horizon > 0.0)) throw usage_error("sample_subordinator: horizon must be > 0");
    SubordinatorPath path;
    path.horizon = horizon;
    path.drift_plus = spec.drift_plus;
    SplitMix64 rng(seed);
    path.kill_time = spec.kill > 0.0 ? rng.next_exponential(spec.kill)
                                     : std::numeric_limits<double>::infinity();
    const double end = std::min(horizon, path.kill_time);
    const double jump_rate = spec.jump_mass();
    const double total_rate = jump_rate + spec.independent_mark_rate;
    if (total_rate > 0.0) {
        double t = 0.0;
        for (;;) {
            t += rng.next_exponential(total_rate);
            if (t > end) break;
            const bool is_jump =
                jump_rate > 0.0 && rng.next_unit_co() * total_rate < jump_rate;
            if (is_jump) {
                const auto j = spec.jump_measure->sample_jump(rng);
                path.events.push_back({t, j.overshoot, j.mark});
            } else {
                path.events.push_back({t, 0.0, 1});
            }
        }
    }
    return path;
}

std::string subordinator_to_csv(const SubordinatorPath& path) {
    std::string out = "local_time,dh_plus,dh_mark\n";
    char buf[80];
    for (const auto& e : path.events) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", e.local_time, e.dh_plus,
                      e.dh_mark);
        out += buf;
    }
    return out;
}

double subordinator_exponent(const SubordinatorSpec& spec, double beta, double gamma,
                             double quad_rel) {
    if (beta < 0.0 || gamma < 0.0)
        throw usage_error("subordinator_exponent: beta, gamma must be >= 0");
    double ex = spec.kill + spec.drift_plus * beta -
                spec.independent_mark_rate * std::expm1(-gamma);
    if (spec.jump_measure) {
        const auto& mu = *spec.jump_measure;
        const double eg = std::exp(-gamma);
        // ∫ (1 - e^{-beta u}) mu(du,{0}) + ∫ (1 - e^{-beta u - gamma}) mu(du,{1})
        auto f = [&](double u) {
            const double ebu = std::exp(-beta * u);
            return (1.0 - ebu) * mu.nomark_density(u) + (1.0 - ebu * eg) * mu.mark_density(u);
        };
        ex += integrate_to_infinity(f, 0.0, quad_rel);
        for (const auto& a : mu.atom_parts()) {
            // Atom-derived density m e^{-eta (z0 - y)} on 0 < y < z0.
            const double eta = mu.eta();
            auto g = [&](double y) {
                const double dens = std::exp(-eta * (a.y - y));
                const double e_term = a.q ? std::exp(-beta * y - gamma) : std::exp(-beta * y);
                return (1.0 - e_term) * dens;
            };
            const double unit = integrate(g, 0.0, a.y, quad_rel);
            const double w = eta == 0.0 ? a.y : -std::expm1(-eta * a.y) / eta;
            ex += a.mass / w * unit;
        }
    }
    return ex;
}

}  // namespace fluctlab
