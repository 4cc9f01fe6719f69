#include "fluctlab/path_simulator.hpp"

#include <cmath>
#include <cstdio>

#include "fluctlab/errors.hpp"

namespace fluctlab {

void exact_split(double size, double raw_overshoot, double& overshoot, double& undershoot) {
    double o = std::min(std::max(raw_overshoot, 0.0), size);
    double u = size - o;
    o = size - u;
    for (int i = 0; i < 4 && o + u != size; ++i) {
        u = size - o;
        o = size - u;
    }
    overshoot = o;
    undershoot = u;
}

double MarkedPath::value_at(double t) const {
    double v = drift * t;
    for (const auto& e : events) {
        if (e.time > t) break;
        v += e.size;
    }
    return v;
}

// Same fold as the ladder record scanner, so that H+(t) at an inverse local
// time reproduces this value bitwise.
double MarkedPath::supremum_at(double t) const {
    double v = 0.0;
    double sup = 0.0;
    double prev = 0.0;
    for (const auto& e : events) {
        if (e.time > t) break;
        const double pre = v + drift * (e.time - prev);
        const double candidate = pre + e.size;
        v = candidate;
        prev = e.time;
        if (candidate > sup) {
            double o, u;
            exact_split(e.size, candidate - sup, o, u);
            sup += o;
        }
    }
    return sup;
}

EventStream::EventStream(const ProcessSpec& spec, const MarkRule& mark, std::uint64_t seed)
    : spec_(&spec), mark_(mark), rng_(seed) {
    spec.validate();
    rate_ = spec.levy.total_mass();
    if (!std::isfinite(rate_))
        throw unsupported_measure(
            "sample_marked_path: infinite total mass; use a truncation preset "
            "(power family with cutoff > 0)");
    if (spec.levy.atoms().empty() && spec.levy.components().size() == 1) {
        if (const auto* e = std::get_if<ExponentialJumps>(&spec.levy.components()[0]))
            exp_rate_ = e->rate;
    }
}

bool EventStream::next(double horizon, JumpEvent& out) {
    if (rate_ <= 0.0) {
        time_ = horizon;
        return false;
    }
    const double gap = rng_.next_exponential(rate_);
    const double t = time_ + gap;
    if (t > horizon) {
        time_ = horizon;
        return false;
    }
    time_ = t;
    const double size =
        exp_rate_ > 0.0 ? rng_.next_exponential(exp_rate_) : spec_->levy.sample_jump(rng_);
    const int mark = rng_.next_bernoulli(mark_(size)) ? 1 : 0;
    out = JumpEvent{t, size, mark};
    return true;
}

MarkedPath sample_marked_path(const ProcessSpec& spec, const MarkRule& mark, double horizon,
                              std::uint64_t seed) {
    if (!(horizon > 0.0)) throw usage_error("sample_marked_path: horizon must be > 0");
    MarkedPath path;
    path.drift = spec.drift;
    path.horizon = horizon;
    path.seed = seed;
    EventStream stream(spec, mark, seed);
    JumpEvent e;
    while (stream.next(horizon, e)) path.events.push_back(e);
    return path;
}

MarkedPath rescale_path(const MarkedPath& path, const Scaling& scaling, double target_horizon) {
    const double n = static_cast<double>(scaling.n);
    if (target_horizon > 0.0 && path.horizon < scaling.d_n * target_horizon)
        throw usage_error("rescale_path: source horizon shorter than d_n * target horizon");
    MarkedPath out;
    out.drift = path.drift * scaling.d_n / n;
    out.horizon = path.horizon / scaling.d_n;
    out.seed = path.seed;
    out.events.reserve(path.events.size());
    for (const auto& e : path.events)
        out.events.push_back(JumpEvent{e.time / scaling.d_n, e.size / n, e.mark});
    return out;
}

std::string path_to_csv(const MarkedPath& path) {
    std::string out = "time,size,mark\n";
    char buf[80];
    for (const auto& e : path.events) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", e.time, e.size, e.mark);
        out += buf;
    }
    return out;
}

}  // namespace fluctlab
