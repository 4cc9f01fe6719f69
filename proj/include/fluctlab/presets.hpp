#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluctlab/levy_calculus.hpp"

namespace fluctlab {

// A registered analytic family: everything the verify/converge experiments
// need is computable in closed form for these.
struct Preset {
    std::string id;
    std::string description;
    ProcessSpec base;           // unscaled member (n = 1, d_1 = 1)
    MarkRule base_mark;         // mark rule of the unscaled member
    bool scalable = false;      // participates in n-grid experiments
    std::optional<ProcessFamily> family;  // set when scalable
};

const std::vector<Preset>& registered_presets();
const Preset& find_preset(const std::string& id);  // usage error with the list
std::string preset_id_list();

}  // namespace fluctlab
