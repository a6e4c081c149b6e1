#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "botdrive/driver_models.hpp"
#include "botdrive/inference.hpp"
#include "botdrive/planner.hpp"
#include "botdrive/pomdp.hpp"
#include "botdrive/traj_opt.hpp"

namespace botdrive {

struct Diagnostic {
    std::string field;
    std::string message;
};

/// Invalid user input (config or scenario). Carries one diagnostic per offending field.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string what, std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);
};

enum class Variant { full, wo_unc, wo_is, h4 };

inline constexpr Variant kAllVariants[] = {Variant::full, Variant::wo_unc, Variant::wo_is, Variant::h4};

std::string_view to_string(Variant v);
/// Throws ConfigError for an unknown name.
Variant parse_variant(std::string_view text);

struct HarnessConfig {
    /// Worker threads for batches; episodes never share state.
    int workers = 1;
    /// Planning horizon used by the h4 ablation, seconds.
    double short_horizon = 4.0;
};

/// Every tunable constant of every module.
struct Config {
    DriverConfig driver;
    PomdpConfig pomdp;
    InferenceConfig inference;
    PlannerConfig planner;
    TrajOptConfig traj_opt;
    HarnessConfig harness;
};

nlohmann::json to_json(const Config& cfg);
/// Overrides `base` with the keys present in `j`. Unknown keys and type errors are diagnostics.
Config config_from_json(const nlohmann::json& j, const Config& base = {});
Config load_config(const std::filesystem::path& path);

/// Range and consistency checks; empty when valid.
std::vector<Diagnostic> validate_config(const Config& cfg);

/// Changes only the parameters that define the ablation.
Config apply_variant(Config cfg, Variant variant);

}  // namespace botdrive
