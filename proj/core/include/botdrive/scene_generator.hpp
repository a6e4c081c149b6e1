#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "botdrive/scenario_spec.hpp"

namespace botdrive {

class UnknownTemplate : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SceneParams {
    /// Number of moving exo-agents; negative selects the template default.
    int exo_count = -1;
    double duration = 40.0;
    /// Scales positional jitter, 0 = canonical layout.
    double jitter = 1.0;
};

std::vector<std::string> scene_templates();

/// Deterministic in (template, params, seed). Throws UnknownTemplate.
ScenarioSpec generate_scene(std::string_view name, const SceneParams& params, std::uint64_t seed);

}  // namespace botdrive
