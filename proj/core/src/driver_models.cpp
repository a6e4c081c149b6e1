#include "botdrive/driver_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "botdrive/random.hpp"

namespace botdrive {

std::string_view to_string(IntentionKind kind) {
    switch (kind) {
        case IntentionKind::lane_follow:
            return "LF";
        case IntentionKind::lane_change_left:
            return "LC_L";
        case IntentionKind::lane_change_right:
            return "LC_R";
    }
    return "?";
}

IntentionKind parse_intention_kind(std::string_view text) {
    for (const IntentionKind k : kAllIntentionKinds) {
        if (to_string(k) == text) {
            return k;
        }
    }
    throw std::invalid_argument("unknown intention '" + std::string(text) + "'");
}

double idm_accel(double speed, double desired_speed, double gap, double lead_speed, const IdmParams& p,
                 double emergency_decel, double gap_epsilon) {
    const double free_term = 1.0 - std::pow(speed / desired_speed, p.exponent);
    double interaction = 0.0;
    if (std::isfinite(gap)) {
        const double g = std::max(gap, gap_epsilon);
        const double approach = speed - lead_speed;
        const double dynamic =
            speed * p.time_headway + speed * approach / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel));
        const double desired_gap = p.min_gap + std::max(0.0, dynamic);
        interaction = (desired_gap / g) * (desired_gap / g);
    }
    return std::clamp(p.max_accel * (free_term - interaction), -emergency_decel, p.max_accel);
}

Vec2 lookahead_point(const ReferencePath& path, double s_on_lane, double lookahead) {
    const double target_s = s_on_lane + lookahead;
    if (target_s <= path.lane->length() || path.next == nullptr) {
        return point_at_clamped(*path.lane, target_s).position;
    }
    return point_at_clamped(*path.next, target_s - path.lane->length()).position;
}

double pure_pursuit_yaw(const PhysicalState& state, const ReferencePath& path, double lookahead,
                        double yaw_rate_max) {
    const LaneProjection proj = project_onto_lane(*path.lane, state.position);
    const Vec2 target = lookahead_point(path, proj.s, lookahead);
    const Vec2 rel = target - state.position;
    if (dot(rel, rel) < 1e-12) {
        return 0.0;
    }
    const double alpha = wrap_angle(std::atan2(rel.y, rel.x) - state.heading);
    const double curvature = 2.0 * std::sin(alpha) / lookahead;
    return std::clamp(curvature * state.speed, -yaw_rate_max, yaw_rate_max);
}

namespace {

bool occupies(const Lane& lane, const LaneProjection& p, const DriverConfig& cfg) {
    return p.interior && std::abs(p.d) < 0.5 * lane.width + cfg.lane_occupancy_margin;
}

}  // namespace

NeighborVehicle find_leader(const Lane& lane, const Lane* next, double s, const Traffic& traffic,
                            const DriverConfig& cfg) {
    NeighborVehicle best;
    for (std::size_t i = 0; i < traffic.vehicles.size(); ++i) {
        if (i == traffic.skip) {
            continue;
        }
        const PhysicalState& v = traffic.vehicles[i];
        double other_s = 0.0;
        bool match = false;
        const LaneProjection p = project_onto_lane(lane, v.position);
        if (occupies(lane, p, cfg)) {
            other_s = p.s;
            match = true;
        } else if (next != nullptr) {
            const LaneProjection q = project_onto_lane(*next, v.position);
            if (occupies(*next, q, cfg)) {
                other_s = lane.length() + q.s;
                match = true;
            }
        }
        if (!match || other_s <= s) {
            continue;
        }
        const double gap = other_s - s - cfg.vehicle_length;
        if (!best.found || gap < best.gap) {
            best = NeighborVehicle{gap, v.speed, other_s, true};
        }
    }
    return best;
}

NeighborVehicle find_follower(const Lane& lane, double s, const Traffic& traffic, const DriverConfig& cfg) {
    NeighborVehicle best;
    for (std::size_t i = 0; i < traffic.vehicles.size(); ++i) {
        if (i == traffic.skip) {
            continue;
        }
        const PhysicalState& v = traffic.vehicles[i];
        const LaneProjection p = project_onto_lane(lane, v.position);
        if (!occupies(lane, p, cfg) || p.s > s) {
            continue;
        }
        const double gap = s - p.s - cfg.vehicle_length;
        if (!best.found || gap < best.gap) {
            best = NeighborVehicle{gap, v.speed, p.s, true};
        }
    }
    return best;
}

bool mobil_decide(const PhysicalState& subject, double desired_speed, const Traffic& traffic,
                  LaneChangeDirection direction, const RoadNetwork& network, const DriverConfig& cfg,
                  double incentive_bias) {
    if (!network.contains(subject.lane)) {
        return false;
    }
    const Lane& lane = network.lane(subject.lane);
    const auto target_id = direction == LaneChangeDirection::left ? lane.left_neighbor : lane.right_neighbor;
    if (!target_id) {
        return false;
    }
    const Lane& target = network.lane(*target_id);
    const double s_target = project_onto_lane(target, subject.position).s;
    const double v = subject.speed;
    const double len = cfg.vehicle_length;
    auto accel = [&](double speed, double gap, double lead_speed) {
        return idm_accel(speed, desired_speed, gap, lead_speed, cfg);
    };

    const NeighborVehicle cur_lead = find_leader(lane, nullptr, subject.s, traffic, cfg);
    const NeighborVehicle cur_follow = find_follower(lane, subject.s, traffic, cfg);
    const NeighborVehicle new_lead = find_leader(target, nullptr, s_target, traffic, cfg);
    const NeighborVehicle new_follow = find_follower(target, s_target, traffic, cfg);

    double others_gain = 0.0;
    if (new_follow.found) {
        const double after = accel(new_follow.speed, new_follow.gap, v);
        if (after < -cfg.mobil.safe_decel) {
            return false;
        }
        const double gap_before = new_lead.found ? new_lead.s - new_follow.s - len
                                                 : std::numeric_limits<double>::infinity();
        others_gain += after - accel(new_follow.speed, gap_before, new_lead.speed);
    }
    if (cur_follow.found) {
        const double before = accel(cur_follow.speed, cur_follow.gap, v);
        const double gap_after = cur_lead.found ? cur_lead.s - cur_follow.s - len
                                                : std::numeric_limits<double>::infinity();
        others_gain += accel(cur_follow.speed, gap_after, cur_lead.speed) - before;
    }
    const double own_gain = accel(v, new_lead.gap, new_lead.speed) - accel(v, cur_lead.gap, cur_lead.speed);
    const double incentive = own_gain + cfg.mobil.politeness * others_gain + incentive_bias;
    return incentive > cfg.mobil.threshold;
}

LaneId select_connector(const PhysicalState& state, const RoadNetwork& network, LaneId goal, ConnectorChoice choice) {
    const Lane& lane = network.lane(state.lane);
    if (lane.successors.empty()) {
        throw DeadEnd("lane " + std::to_string(lane.id.value) + " has no successor");
    }
    if (lane.successors.size() == 1) {
        return lane.successors.front();
    }
    std::vector<LaneId> options = lane.successors;
    std::sort(options.begin(), options.end());
    if (choice.policy == ConnectorPolicy::goal_directed) {
        LaneId best = options.front();
        int best_hops = std::numeric_limits<int>::max();
        for (const LaneId id : options) {
            const int hops = network.lane_change_distance(id, goal).value_or(std::numeric_limits<int>::max());
            if (hops < best_hops) {
                best_hops = hops;
                best = id;
            }
        }
        return best;
    }
    SplitMix64 rng(mix_seed({choice.seed, static_cast<std::uint64_t>(lane.id.value)}));
    return options[rng() % options.size()];
}

std::optional<Intention> make_intention(IntentionKind kind, LaneId lane_id, const RoadNetwork& network) {
    if (kind == IntentionKind::lane_follow) {
        return Intention{};
    }
    const Lane& lane = network.lane(lane_id);
    const auto target = kind == IntentionKind::lane_change_left ? lane.left_neighbor : lane.right_neighbor;
    if (!target) {
        return std::nullopt;
    }
    return Intention{kind, target, false};
}

OrientedBox footprint(const PhysicalState& state, const DriverConfig& cfg) {
    return OrientedBox{state.position, state.heading, cfg.vehicle_length, cfg.vehicle_width};
}

namespace {

const Lane* successor_of(const Lane& lane, const PhysicalState& anchor, const RoadNetwork& network,
                         ConnectorChoice connector) {
    if (lane.successors.empty()) {
        return nullptr;
    }
    PhysicalState probe = anchor;
    probe.lane = lane.id;
    return &network.lane(select_connector(probe, network, network.goal_lane(), connector));
}

}  // namespace

DriverStep step_driver(const PhysicalState& state, const Intention& intention, const StyleParam& style,
                       const Traffic& traffic, const RoadNetwork& network, const DriverConfig& cfg, double dt,
                       ConnectorChoice connector) {
    if (is_lane_change(intention.kind) && (!intention.target_lane || !network.contains(*intention.target_lane))) {
        throw IllegalIntention("lane change toward a nonexistent lane");
    }
    const Lane& lane = network.lane(state.lane);
    const Lane* next = successor_of(lane, state, network, connector);
    const double v0 = style.desired_speed;
    const double lf_lookahead = std::max(cfg.lf_lookahead_min, cfg.lf_lookahead_time * state.speed);

    Intention out = intention;
    const NeighborVehicle lead = find_leader(lane, next, state.s, traffic, cfg);
    double accel = idm_accel(state.speed, v0, lead.gap, lead.speed, cfg);
    ReferencePath reference{&lane, next};
    double lookahead = lf_lookahead;

    if (is_lane_change(intention.kind)) {
        const Lane& target = network.lane(*intention.target_lane);
        if (!out.committed) {
            const auto direction = intention.kind == IntentionKind::lane_change_left ? LaneChangeDirection::left
                                                                                      : LaneChangeDirection::right;
            const auto neighbor = direction == LaneChangeDirection::left ? lane.left_neighbor : lane.right_neighbor;
            if (target.id == lane.id) {
                out.committed = true;
            } else if (neighbor == target.id &&
                       mobil_decide(state, v0, traffic, direction, network, cfg, cfg.lc_intention_bias)) {
                out.committed = true;
            }
        }
        const Lane* target_next = successor_of(target, state, network, connector);
        const double s_target = project_onto_lane(target, state.position).s;
        const NeighborVehicle target_lead = find_leader(target, target_next, s_target, traffic, cfg);
        accel = std::min(accel, idm_accel(state.speed, v0, target_lead.gap, target_lead.speed, cfg));
        if (out.committed) {
            reference = ReferencePath{&target, target_next};
            lookahead = style.lookahead;
        }
    }

    const double yaw_rate = pure_pursuit_yaw(state, reference, lookahead, cfg.yaw_rate_max);

    PhysicalState next_state = state;
    next_state.position = state.position + unit_from_heading(state.heading) * (state.speed * dt);
    next_state.heading = wrap_angle(state.heading + yaw_rate * dt);
    next_state.speed = std::max(0.0, state.speed + accel * dt);
    next_state.acceleration = (next_state.speed - state.speed) / dt;
    next_state.yaw_rate = yaw_rate;

    const auto proj = network.try_project(next_state.position, state.lane);
    const LaneProjection anchor = proj ? *proj : network.project_onto(state.lane, next_state.position);
    next_state.lane = anchor.lane;
    next_state.s = anchor.s;
    next_state.d = anchor.d;

    if (is_lane_change(out.kind) && out.committed) {
        const Lane& target = network.lane(*out.target_lane);
        const LaneProjection on_target = project_onto_lane(target, next_state.position);
        const double lane_heading = point_at_clamped(target, on_target.s).heading;
        if (std::abs(on_target.d) < cfg.lc_complete_offset &&
            std::abs(wrap_angle(next_state.heading - lane_heading)) < cfg.lc_complete_heading) {
            out = Intention{};
            next_state.lane = target.id;
            next_state.s = on_target.s;
            next_state.d = on_target.d;
        }
    }
    return DriverStep{next_state, out};
}

}  // namespace botdrive
