#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "botdrive/geometry.hpp"

namespace botdrive {

struct LaneId {
    int value = -1;

    constexpr auto operator<=>(const LaneId&) const = default;
};

class RoadError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NoLaneWithinRadius : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct Lane {
    LaneId id;
    std::vector<Vec2> centerline;
    double width = 3.5;
    std::vector<LaneId> successors;
    std::optional<LaneId> left_neighbor;
    std::optional<LaneId> right_neighbor;
    bool is_connector = false;

    /// Arc length at each centerline vertex; filled by RoadNetwork.
    std::vector<double> vertex_s;

    double length() const { return vertex_s.empty() ? 0.0 : vertex_s.back(); }
};

struct Pose {
    Vec2 position;
    double heading = 0.0;
};

/// Result of projecting a point onto one lane.
struct LaneProjection {
    LaneId lane;
    double s = 0.0;         ///< arc length of the foot point, in [0, length]
    double d = 0.0;         ///< signed lateral offset, positive = left of travel direction
    double distance = 0.0;  ///< euclidean distance to the polyline
    bool interior = true;   ///< false when the point lies before the start or past the end
};

/// Position and heading on the polyline at arc length s. Throws OutOfRange.
Pose point_at(const Lane& lane, double s);
/// Same as point_at with s clamped into [0, length].
Pose point_at_clamped(const Lane& lane, double s);

/// Immutable lane graph. Lane lengths are polyline arc lengths.
class RoadNetwork {
public:
    static constexpr int unreachable = -1;

    RoadNetwork() = default;
    RoadNetwork(std::vector<Lane> lanes, LaneId goal_lane);

    bool empty() const { return lanes_.empty(); }
    bool contains(LaneId id) const { return index_.contains(id.value); }
    const Lane& lane(LaneId id) const;
    std::span<const Lane> lanes() const { return lanes_; }
    LaneId goal_lane() const { return goal_lane_; }
    double max_lane_width() const { return max_width_; }

    /// Lane whose centerline best explains the point. Prefers the hint, then its
    /// neighbors, successors and predecessors, then the global nearest lane.
    LaneProjection project(Vec2 position, std::optional<LaneId> hint = std::nullopt) const;
    /// Like project() but returns nullopt instead of throwing NoLaneWithinRadius.
    std::optional<LaneProjection> try_project(Vec2 position, std::optional<LaneId> hint = std::nullopt) const;
    /// Projection onto one specific lane; never throws for a known lane.
    LaneProjection project_onto(LaneId lane, Vec2 position) const;

    /// Minimum number of lateral hops from one lane to another with free travel
    /// along successors, or nullopt when no path exists.
    std::optional<int> lane_change_distance(LaneId from, LaneId to) const;
    bool reaches_goal(LaneId id) const;
    std::span<const LaneId> predecessors(LaneId id) const;

private:
    std::size_t index_of(LaneId id) const;
    bool accepts(const Lane& lane, const LaneProjection& p) const;

    std::vector<Lane> lanes_;
    std::unordered_map<int, std::size_t> index_;
    std::vector<std::vector<LaneId>> predecessors_;
    std::vector<int> hops_;  // row-major n x n, unreachable = -1
    std::vector<bool> reaches_goal_;
    LaneId goal_lane_;
    double max_width_ = 0.0;
};

LaneProjection project_onto_lane(const Lane& lane, Vec2 position);

}  // namespace botdrive

template <>
struct std::hash<botdrive::LaneId> {
    std::size_t operator()(const botdrive::LaneId& id) const noexcept { return std::hash<int>{}(id.value); }
};
