#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "botdrive/driver_models.hpp"
#include "botdrive/road.hpp"

namespace botdrive {

using AgentId = int;
inline constexpr AgentId kEgoId = 0;

/// One vehicle with its driver model: physical state plus (m, theta).
struct AgentState {
    AgentId id = kEgoId;
    PhysicalState state;
    Intention intention;
    StyleParam style;
    std::uint64_t connector_seed = 0;

    bool operator==(const AgentState&) const = default;
};

struct JointState {
    AgentState ego;
    std::vector<AgentState> exos;

    bool operator==(const JointState&) const = default;
};

/// A determinized sample of the hidden world: every stochastic draw made while
/// simulating it derives from noise_seed.
struct Scenario {
    JointState joint;
    std::uint64_t noise_seed = 0;

    bool operator==(const Scenario&) const = default;
};

struct ObservationNoise {
    double position = 0.3;
    double heading = 0.05;
    double speed = 0.3;
};

struct AgentObservation {
    AgentId id = 0;
    Vec2 position;
    double heading = 0.0;
    double speed = 0.0;

    bool operator==(const AgentObservation&) const = default;
};

struct Observation {
    double timestamp = 0.0;
    std::vector<AgentObservation> agents;

    bool operator==(const Observation&) const = default;
};

struct RewardWeights {
    double collision = 10.0;
    double efficiency = 0.05;
    double goal = 0.1;
    double goal_exponent = 1.0;
    double lane_change = 0.3;
    double desired_speed = 10.0;
    double discount = 0.98;
    /// Goal distance charged when the goal lane cannot be reached at all.
    double unreachable_goal_distance = 3.0;
};

struct PomdpConfig {
    double dt = 0.2;
    double lf_duration = 2.0;
    double lc_duration = 4.0;
    RewardWeights reward;
    /// Nominal ego driver style; desired_speed is overridden by reward.desired_speed.
    double ego_lookahead = 8.0;
    ObservationNoise noise;
};

struct MacroAction {
    IntentionKind kind = IntentionKind::lane_follow;
    double duration = 2.0;

    int ticks(double dt) const;
    bool operator==(const MacroAction&) const = default;
};

MacroAction make_macro_action(IntentionKind kind, const PomdpConfig& cfg);

/// Everything the forward model needs; immutable during planning.
struct DrivingModel {
    RoadNetwork network;
    DriverConfig driver;
    PomdpConfig pomdp;
    /// Parked vehicles, speed 0, fully known.
    std::vector<PhysicalState> obstacles;

    StyleParam ego_style(double speed_scale = 1.0) const {
        return StyleParam{pomdp.reward.desired_speed * speed_scale, pomdp.ego_lookahead};
    }
};

/// Anchors a pose to the road; throws NoLaneWithinRadius.
PhysicalState anchored_state(const RoadNetwork& network, Vec2 position, double heading, double speed,
                             std::optional<LaneId> hint = std::nullopt);

/// True while the ego is executing a lane change past its MOBIL gate.
bool lane_change_in_progress(const Intention& intention);

/// LF always; LC toward an existing neighbor unless a lane change is mid-execution.
std::vector<MacroAction> legal_actions(const AgentState& ego, const RoadNetwork& network, const PomdpConfig& cfg);

/// Installs the driver model of a macro-action on the ego. Returns true when this
/// starts a new lane change (the smoothness penalty applies).
bool apply_macro_action(AgentState& ego, const MacroAction& action, const RoadNetwork& network);

/// Lane-change hops from a lane to the goal, or the configured penalty distance.
double goal_distance(const RoadNetwork& network, LaneId lane, const RewardWeights& weights);

/// Per-tick reward; always <= 0.
double step_reward(const PhysicalState& ego, bool collided, bool lane_change_initiated, double goal_hops,
                   const RewardWeights& weights, double dt);

bool ego_collides(const JointState& joint, const DrivingModel& model);

/// Advances every agent one tick synchronously. When ego_override is given the
/// ego is placed there instead of being driven by its model.
JointState step_joint(const JointState& current, const DrivingModel& model, std::vector<PhysicalState>& scratch,
                      const AgentState* ego_override = nullptr);

/// Noisy observation of every exo-agent; each draw is a pure function of (seed, tick, agent id).
Observation extract_observation(const JointState& joint, std::uint64_t noise_seed, int tick,
                                const ObservationNoise& noise, double dt);

struct SimOptions {
    int start_tick = 0;              ///< global tick index of the first simulated tick
    double start_discount = 1.0;     ///< gamma^start_tick, carried by the caller
    bool apply_action = true;        ///< false continues the ego's current driver model
    bool stop_on_collision = true;
    bool record_segment = false;
    bool emit_observation = true;
    int max_ticks = -1;              ///< truncates the macro-action when >= 0
};

struct SimOutcome {
    std::vector<JointState> segment;  ///< per-tick states after each tick (when recorded)
    std::vector<double> tick_rewards;  ///< discounted, one per simulated tick
    double reward = 0.0;
    bool terminal = false;
    bool collided = false;
    int ticks = 0;
    JointState final_state;
    Observation final_obs;
    double next_discount = 1.0;
};

/// Runs one macro-action against a determinized scenario.
SimOutcome simulate(const Scenario& scenario, const MacroAction& action, const DrivingModel& model,
                    const SimOptions& options = {});

}  // namespace botdrive
