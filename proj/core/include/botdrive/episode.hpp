#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botdrive/config.hpp"
#include "botdrive/scenario_spec.hpp"

namespace botdrive {

/// Thrown when the closed loop detects a broken internal invariant.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ComfortLimits {
    double max_accel = 2.5;
    double max_jerk = 4.0;
};

struct EpisodeMetrics {
    /// Undiscounted sum of per-tick rewards.
    double reward = 0.0;
    bool collided = false;
    bool missed_goal = false;
    std::optional<double> time_to_goal;
    double comfort = 1.0;
    int ticks = 0;
};

struct AgentSummary {
    std::vector<std::pair<IntentionKind, double>> intentions;
    StyleParam mean_style;
};

struct TickRecord {
    int tick = 0;  ///< state after this many ticks
    double time = 0.0;
    JointState truth;
    Observation observation;
    std::map<AgentId, AgentSummary> belief;
    PlannerStats planner;
    MacroAction action;
    std::vector<MacroAction> sequence;
    double speed_scale = 1.0;
    int candidates = 0;
    double reward = 0.0;
    bool collided = false;
};

struct EpisodeResult {
    Variant variant = Variant::full;
    std::uint64_t seed = 0;
    EpisodeMetrics metrics;
    JointState initial;
    std::vector<TickRecord> ticks;
    /// Resolved config after the variant was applied.
    Config config;
    ScenarioSpec spec;
};

/// Fraction of ticks with |a| <= max_accel and |jerk| <= max_jerk. Jerk is the
/// backward difference of acceleration, zero at the first tick.
double compute_comfort(std::span<const double> accelerations, double dt, const ComfortLimits& limits = {});

/// Closed-loop episode. Deterministic in (spec, config, variant, seed).
EpisodeResult run_episode(const ScenarioSpec& spec, const Config& config, Variant variant, std::uint64_t seed);

/// Metrics recomputed from the true trajectory of a finished episode.
EpisodeMetrics compute_metrics(const EpisodeResult& result);

struct BatchJob {
    ScenarioSpec spec;
    Variant variant = Variant::full;
    std::uint64_t seed = 0;
};

struct BatchRow {
    std::string scene;
    Variant variant = Variant::full;
    std::uint64_t seed = 0;
    EpisodeMetrics metrics;
};

struct VariantSummary {
    Variant variant = Variant::full;
    int episodes = 0;
    double mean_reward = 0.0;
    double collision_rate = 0.0;  ///< percent
    double miss_goal_rate = 0.0;  ///< percent
    std::optional<double> mean_time_to_goal;
    double mean_comfort = 0.0;
};

/// Runs jobs on `config.harness.workers` threads; rows keep job order.
std::vector<BatchRow> run_batch(const std::vector<BatchJob>& jobs, const Config& config);
std::vector<VariantSummary> summarize(const std::vector<BatchRow>& rows);

std::string episodes_csv(const std::vector<BatchRow>& rows);
std::string summary_csv(const std::vector<VariantSummary>& summaries);

}  // namespace botdrive
