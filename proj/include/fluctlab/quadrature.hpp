#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "fluctlab/errors.hpp"

namespace fluctlab {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
};

namespace detail {

// Gauss-Kronrod 15(7) nodes and weights on [-1,1].
inline constexpr double kGK15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};

inline constexpr double kGK15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};

// Gauss-7 weights aligned with the odd Kronrod nodes.
inline constexpr double kG7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <typename F>
QuadResult gk15(const F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double kronrod = 0.0;
    double gauss = 0.0;
    double abs_int = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double fx = f(mid + half * kGK15Nodes[i]);
        kronrod += kGK15Weights[i] * fx;
        abs_int += kGK15Weights[i] * std::abs(fx);
        if (i % 2 == 1) gauss += kG7Weights[i / 2] * fx;
    }
    kronrod *= half;
    gauss *= half;
    abs_int *= half;
    // Error estimate floored at the round-off level of the panel.
    const double err = std::max(std::abs(kronrod - gauss), 2e-16 * abs_int);
    return {kronrod, err};
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval: split the worst panel until
// the summed error estimate meets the target or the panel budget runs out.
// Throws numeric_failure (with the achieved bound) if the target is missed
// by more than a factor of eight.
template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 1e-300) {
    if (!(b > a)) return 0.0;
    std::priority_queue<detail::Panel> panels;
    double value = 0.0, error = 0.0;
    const int seed_panels = 8;
    for (int i = 0; i < seed_panels; ++i) {
        const double lo = a + (b - a) * i / seed_panels;
        const double hi = a + (b - a) * (i + 1) / seed_panels;
        const auto r = detail::gk15(f, lo, hi);
        panels.push({lo, hi, r.value, r.abs_error});
        value += r.value;
        error += r.abs_error;
    }
    const std::size_t max_panels = 4096;
    while (error > std::max(rel_tol * std::abs(value), abs_tol) &&
           panels.size() < max_panels) {
        const detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.abs_error + right.abs_error - worst.error;
        panels.push({worst.a, mid, left.value, left.abs_error});
        panels.push({mid, worst.b, right.value, right.abs_error});
    }
    const double target = std::max(rel_tol * std::abs(value), abs_tol);
    if (error > 8.0 * target && error > 1e-13 * std::abs(value) && error > 1e-14) {
        throw numeric_failure("quadrature did not converge: achieved error " +
                              std::to_string(error) + " on [" + std::to_string(a) + "," +
                              std::to_string(b) + "]");
    }
    return value;
}

// ∫_a^∞ f, via the substitution r = a + t/(1-t). The integrand must decay.
template <typename F>
double integrate_to_infinity(const F& f, double a, double rel_tol = 1e-10) {
    auto g = [&f, a](double t) {
        const double om = 1.0 - t;
        const double r = a + t / om;
        return f(r) / (om * om);
    };
    return integrate(g, 0.0, 1.0, rel_tol);
}

}  // namespace fluctlab
