#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

#include "botdrive/geometry.hpp"
#include "botdrive/road.hpp"

namespace botdrive {

class IllegalIntention : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DeadEnd : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Kinematic state of one vehicle. (lane, s, d) is the road anchor of position.
struct PhysicalState {
    Vec2 position;
    double heading = 0.0;
    double speed = 0.0;
    double acceleration = 0.0;
    double yaw_rate = 0.0;
    LaneId lane;
    double s = 0.0;
    double d = 0.0;

    bool operator==(const PhysicalState&) const = default;
};

enum class IntentionKind : std::uint8_t { lane_follow = 0, lane_change_left = 1, lane_change_right = 2 };

inline constexpr IntentionKind kAllIntentionKinds[] = {IntentionKind::lane_follow, IntentionKind::lane_change_left,
                                                       IntentionKind::lane_change_right};

std::string_view to_string(IntentionKind kind);
/// Parses "LF", "LC_L", "LC_R"; throws std::invalid_argument otherwise.
IntentionKind parse_intention_kind(std::string_view text);

inline bool is_lane_change(IntentionKind kind) { return kind != IntentionKind::lane_follow; }

/// Driver model identity. For lane changes, `committed` flips once the MOBIL
/// gate has opened; the intention collapses back to lane following when the
/// manoeuvre completes.
struct Intention {
    IntentionKind kind = IntentionKind::lane_follow;
    std::optional<LaneId> target_lane;
    bool committed = false;

    bool operator==(const Intention&) const = default;
};

struct StyleParam {
    double desired_speed = 10.0;  ///< IDM v0, m/s
    double lookahead = 8.0;       ///< pure-pursuit lookahead during lane changes, m

    bool operator==(const StyleParam&) const = default;
};

struct StyleBounds {
    double desired_speed_min = 2.0;
    double desired_speed_max = 20.0;
    double lookahead_min = 3.0;
    double lookahead_max = 15.0;
};

struct IdmParams {
    double max_accel = 1.5;
    double comfortable_decel = 2.0;
    double min_gap = 2.0;
    double time_headway = 1.5;
    double exponent = 4.0;
};

struct MobilParams {
    double politeness = 0.5;
    double threshold = 0.2;
    double safe_decel = 3.0;
};

struct DriverConfig {
    IdmParams idm;
    MobilParams mobil;
    StyleBounds style_bounds;
    double emergency_decel = 6.0;
    double yaw_rate_max = 1.0;
    double gap_epsilon = 0.1;
    /// Lane-follow lookahead = max(min, time * speed).
    double lf_lookahead_min = 3.0;
    double lf_lookahead_time = 0.8;
    double lc_complete_offset = 0.3;
    double lc_complete_heading = 0.1;
    /// Extra MOBIL incentive for a driver that intends to change lanes.
    double lc_intention_bias = 1.0;
    /// A vehicle occupies a lane when its center is within half a lane width plus this margin.
    double lane_occupancy_margin = 0.5;
    double vehicle_length = 4.5;
    double vehicle_width = 2.0;
};

/// IDM acceleration, clamped to [-emergency_decel, max_accel]. An infinite gap
/// means no leader; gaps at or below zero are pre-clamped to gap_epsilon.
double idm_accel(double speed, double desired_speed, double gap, double lead_speed, const IdmParams& params,
                 double emergency_decel, double gap_epsilon = 0.1);
inline double idm_accel(double speed, double desired_speed, double gap, double lead_speed, const DriverConfig& cfg) {
    return idm_accel(speed, desired_speed, gap, lead_speed, cfg.idm, cfg.emergency_decel, cfg.gap_epsilon);
}

/// Reference path for pure pursuit: a lane, optionally continued by one successor.
struct ReferencePath {
    const Lane* lane = nullptr;
    const Lane* next = nullptr;
};

Vec2 lookahead_point(const ReferencePath& path, double s_on_lane, double lookahead);

/// Pure pursuit: curvature 2 sin(alpha) / L_d toward the point L_d ahead of the
/// projection of the vehicle onto the path; yaw rate = curvature * speed.
double pure_pursuit_yaw(const PhysicalState& state, const ReferencePath& path, double lookahead, double yaw_rate_max);

/// Other vehicles around the subject. `skip` indexes the subject itself, if present.
struct Traffic {
    std::span<const PhysicalState> vehicles;
    std::size_t skip = std::numeric_limits<std::size_t>::max();
};

struct NeighborVehicle {
    double gap = std::numeric_limits<double>::infinity();  ///< bumper-to-bumper, m
    double speed = 0.0;
    double s = 0.0;  ///< center arc length on the queried lane
    bool found = false;
};

/// Closest vehicle ahead whose footprint occupies `lane`, searching into `next` as well.
NeighborVehicle find_leader(const Lane& lane, const Lane* next, double s, const Traffic& traffic,
                            const DriverConfig& cfg);
/// Closest vehicle behind on `lane`.
NeighborVehicle find_follower(const Lane& lane, double s, const Traffic& traffic, const DriverConfig& cfg);

enum class LaneChangeDirection : std::uint8_t { left, right };

/// MOBIL: safety (new follower decel >= -b_safe) and strict incentive
/// own_gain + p * others_gain + bias > threshold. Other vehicles are assumed to
/// share the subject's desired speed.
bool mobil_decide(const PhysicalState& subject, double desired_speed, const Traffic& traffic,
                  LaneChangeDirection direction, const RoadNetwork& network, const DriverConfig& cfg,
                  double incentive_bias = 0.0);

enum class ConnectorPolicy : std::uint8_t { goal_directed, seeded };

struct ConnectorChoice {
    ConnectorPolicy policy = ConnectorPolicy::seeded;
    std::uint64_t seed = 0;
};

/// Successor taken at the end of the state's lane. Throws DeadEnd if there is none.
LaneId select_connector(const PhysicalState& state, const RoadNetwork& network, LaneId goal, ConnectorChoice choice);

struct DriverStep {
    PhysicalState state;
    Intention intention;
};

/// Advances one vehicle by dt under its driver model with unicycle kinematics.
DriverStep step_driver(const PhysicalState& state, const Intention& intention, const StyleParam& style,
                       const Traffic& traffic, const RoadNetwork& network, const DriverConfig& cfg, double dt,
                       ConnectorChoice connector);

/// Binds an LC intention to the current neighbor lane; nullopt when that neighbor is missing.
std::optional<Intention> make_intention(IntentionKind kind, LaneId lane, const RoadNetwork& network);

OrientedBox footprint(const PhysicalState& state, const DriverConfig& cfg);

}  // namespace botdrive
