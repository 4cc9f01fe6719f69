#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fluctlab/levy_calculus.hpp"
#include "fluctlab/rng.hpp"

namespace fluctlab {

// The bivariate limit subordinator H = (H+, HM): drift b^2/2 on H+, jump
// measure mu with mark bits, an independent stream of pure marks at the
// given rate (theta under B.1, rho = kappa b^2 under B.2), and killing.
struct SubordinatorSpec {
    double drift_plus = 0.0;
    std::shared_ptr<const LadderMeasure> jump_measure;  // null means mu = 0
    double independent_mark_rate = 0.0;
    double kill = 0.0;  // 0 encodes "no killing"

    double jump_mass() const;
    void validate() const;
};

struct SubordinatorEvent {
    double local_time;
    double dh_plus;
    int dh_mark;
};

struct SubordinatorPath {
    double horizon;
    double drift_plus;
    std::vector<SubordinatorEvent> events;
    double kill_time;  // +inf when never killed

    // H+(t) for t < kill_time (the path is undefined past killing).
    double h_plus(double t) const;
    int h_mark(double t) const;
    bool alive_at(double t) const { return t < kill_time; }
};

// Superposition of drift, compound-Poisson jumps from mu (with their marks),
// the independent pure-mark stream, and a shared Exp(kill) lifetime.
SubordinatorPath sample_subordinator(const SubordinatorSpec& spec, double horizon,
                                     std::uint64_t seed);

// kill + drift_plus*beta + rate*(1 - e^{-gamma}) + ∫(1 - e^{-beta u - gamma q}) mu(du,dq),
// so that E[e^{-beta H+(1) - gamma HM(1)}; alive] = e^{-exponent}.
double subordinator_exponent(const SubordinatorSpec& spec, double beta, double gamma,
                             double quad_rel = 1e-10);

// Event dump, same CSV convention as the ladder dump:
// header "local_time,dh_plus,dh_mark", one row per jump.
std::string subordinator_to_csv(const SubordinatorPath& path);

}  // namespace fluctlab
