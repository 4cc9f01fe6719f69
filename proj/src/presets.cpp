#include "fluctlab/presets.hpp"

#include "fluctlab/errors.hpp"

namespace fluctlab {

namespace {

std::vector<Preset> build_presets() {
    std::vector<Preset> out;

    {
        Preset p;
        p.id = "drift-only";
        p.description = "no jumps, deterministic drift -1; degenerate limit";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::zero();
        p.base_mark = MarkRule::constant(0.0);
        p.scalable = true;
        ProcessFamily f;
        f.base = p.base;
        f.drift_only = true;
        f.assumption = Assumption::B1;
        f.theta_bar = 0.0;
        p.family = f;
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.id = "crit-exp";
        p.description = "critical: Levy measure e^{-r} dr, drift -1, every jump marked";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::exponential(1.0, 1.0);
        p.base_mark = MarkRule::constant(1.0);
        p.scalable = false;
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.id = "crit-exp-B1-theta2";
        p.description = "critical exponential, d_n = n^2, constant marks theta_n = 2/n";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::exponential(1.0, 1.0);
        p.base_mark = MarkRule::constant(1.0);
        p.scalable = true;
        ProcessFamily f;
        f.base = p.base;
        f.dn_coefficient = 1.0;
        f.assumption = Assumption::B1;
        f.theta_bar = 2.0;
        p.family = f;
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.id = "crit-exp-B2-cap";
        p.description = "critical exponential, d_n = n^2, size-dependent marks f_n(x) = 1 ∧ (x/n)";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::exponential(1.0, 1.0);
        p.base_mark = MarkRule::linear_cap(1.0);
        p.scalable = true;
        ProcessFamily f;
        f.base = p.base;
        f.dn_coefficient = 1.0;
        f.assumption = Assumption::B2;
        f.kappa_bar = 1.0;
        p.family = f;
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.id = "subcrit-exp-half";
        p.description = "subcritical: Levy measure (1/2) e^{-r} dr, drift -1; killed ladder";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::exponential(0.5, 1.0);
        p.base_mark = MarkRule::constant(1.0);
        p.scalable = false;
        out.push_back(std::move(p));
    }
    {
        Preset p;
        p.id = "supercrit-exp-2";
        p.description = "supercritical: Levy measure 2 e^{-r} dr, drift -1; eta = 1";
        p.base.drift = -1.0;
        p.base.levy = LevyMeasure::exponential(2.0, 1.0);
        p.base_mark = MarkRule::constant(1.0);
        p.scalable = false;
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

const std::vector<Preset>& registered_presets() {
    static const std::vector<Preset> presets = build_presets();
    return presets;
}

std::string preset_id_list() {
    std::string s;
    for (const auto& p : registered_presets()) {
        if (!s.empty()) s += ", ";
        s += p.id;
    }
    return s;
}

const Preset& find_preset(const std::string& id) {
    for (const auto& p : registered_presets())
        if (p.id == id) return p;
    throw usage_error("unknown preset '" + id + "'; registered presets: " + preset_id_list());
}

}  // namespace fluctlab
