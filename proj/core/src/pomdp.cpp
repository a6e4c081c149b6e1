#include "botdrive/pomdp.hpp"

#include <cmath>
#include <random>

#include "botdrive/random.hpp"

namespace botdrive {

int MacroAction::ticks(double dt) const { return static_cast<int>(std::lround(duration / dt)); }

MacroAction make_macro_action(IntentionKind kind, const PomdpConfig& cfg) {
    return MacroAction{kind, kind == IntentionKind::lane_follow ? cfg.lf_duration : cfg.lc_duration};
}

PhysicalState anchored_state(const RoadNetwork& network, Vec2 position, double heading, double speed,
                             std::optional<LaneId> hint) {
    const LaneProjection p = network.project(position, hint);
    PhysicalState s;
    s.position = position;
    s.heading = heading;
    s.speed = speed;
    s.lane = p.lane;
    s.s = p.s;
    s.d = p.d;
    return s;
}

bool lane_change_in_progress(const Intention& intention) {
    return is_lane_change(intention.kind) && intention.committed;
}

std::vector<MacroAction> legal_actions(const AgentState& ego, const RoadNetwork& network, const PomdpConfig& cfg) {
    std::vector<MacroAction> actions{make_macro_action(IntentionKind::lane_follow, cfg)};
    if (lane_change_in_progress(ego.intention)) {
        return actions;
    }
    const Lane& lane = network.lane(ego.state.lane);
    if (lane.left_neighbor) {
        actions.push_back(make_macro_action(IntentionKind::lane_change_left, cfg));
    }
    if (lane.right_neighbor) {
        actions.push_back(make_macro_action(IntentionKind::lane_change_right, cfg));
    }
    return actions;
}

bool apply_macro_action(AgentState& ego, const MacroAction& action, const RoadNetwork& network) {
    if (lane_change_in_progress(ego.intention)) {
        return false;
    }
    if (action.kind == IntentionKind::lane_follow) {
        ego.intention = Intention{};
        return false;
    }
    const auto wanted = make_intention(action.kind, ego.state.lane, network);
    if (!wanted) {
        throw IllegalIntention("macro-action toward a missing neighbor lane");
    }
    if (ego.intention.kind == wanted->kind && ego.intention.target_lane == wanted->target_lane) {
        return false;
    }
    ego.intention = *wanted;
    return true;
}

double goal_distance(const RoadNetwork& network, LaneId lane, const RewardWeights& weights) {
    const auto hops = network.lane_change_distance(lane, network.goal_lane());
    return hops ? static_cast<double>(*hops) : weights.unreachable_goal_distance;
}

double step_reward(const PhysicalState& ego, bool collided, bool lane_change_initiated, double goal_hops,
                   const RewardWeights& w, double dt) {
    const double v = std::max(0.0, ego.speed);
    double r = 0.0;
    if (collided) {
        const double base = 1.0 + v;
        r -= w.collision * base * base * base;
    }
    r -= w.efficiency * std::abs(v - w.desired_speed) * dt;
    r -= w.goal * (std::exp(w.goal_exponent * goal_hops) - 1.0) * dt;
    if (lane_change_initiated) {
        r -= w.lane_change;
    }
    return r;
}

bool ego_collides(const JointState& joint, const DrivingModel& model) {
    const OrientedBox ego_box = footprint(joint.ego.state, model.driver);
    for (const AgentState& exo : joint.exos) {
        if (boxes_overlap(ego_box, footprint(exo.state, model.driver))) {
            return true;
        }
    }
    for (const PhysicalState& obstacle : model.obstacles) {
        if (boxes_overlap(ego_box, footprint(obstacle, model.driver))) {
            return true;
        }
    }
    return false;
}

JointState step_joint(const JointState& current, const DrivingModel& model, std::vector<PhysicalState>& scratch,
                      const AgentState* ego_override) {
    scratch.clear();
    scratch.push_back(current.ego.state);
    for (const AgentState& exo : current.exos) {
        scratch.push_back(exo.state);
    }
    scratch.insert(scratch.end(), model.obstacles.begin(), model.obstacles.end());

    const double dt = model.pomdp.dt;
    JointState next;
    next.exos.reserve(current.exos.size());
    if (ego_override != nullptr) {
        next.ego = *ego_override;
    } else {
        next.ego = current.ego;
        const DriverStep step =
            step_driver(current.ego.state, current.ego.intention, current.ego.style, Traffic{scratch, 0},
                        model.network, model.driver, dt, ConnectorChoice{ConnectorPolicy::goal_directed, 0});
        next.ego.state = step.state;
        next.ego.intention = step.intention;
    }
    for (std::size_t i = 0; i < current.exos.size(); ++i) {
        const AgentState& exo = current.exos[i];
        AgentState moved = exo;
        const DriverStep step =
            step_driver(exo.state, exo.intention, exo.style, Traffic{scratch, i + 1}, model.network, model.driver, dt,
                        ConnectorChoice{ConnectorPolicy::seeded, exo.connector_seed});
        moved.state = step.state;
        moved.intention = step.intention;
        next.exos.push_back(moved);
    }
    return next;
}

Observation extract_observation(const JointState& joint, std::uint64_t noise_seed, int tick,
                                const ObservationNoise& noise, double dt) {
    Observation obs;
    obs.timestamp = tick * dt;
    obs.agents.reserve(joint.exos.size());
    for (const AgentState& exo : joint.exos) {
        SplitMix64 rng(mix_seed({noise_seed, static_cast<std::uint64_t>(tick), static_cast<std::uint64_t>(exo.id)}));
        std::normal_distribution<double> unit(0.0, 1.0);
        AgentObservation o;
        o.id = exo.id;
        // Draw order is fixed so each component is reproducible on its own.
        const double nx = unit(rng);
        const double ny = unit(rng);
        const double nh = unit(rng);
        const double nv = unit(rng);
        o.position = exo.state.position + Vec2{noise.position * nx, noise.position * ny};
        o.heading = wrap_angle(exo.state.heading + noise.heading * nh);
        o.speed = exo.state.speed + noise.speed * nv;
        obs.agents.push_back(o);
    }
    return obs;
}

SimOutcome simulate(const Scenario& scenario, const MacroAction& action, const DrivingModel& model,
                    const SimOptions& options) {
    SimOutcome out;
    JointState state = scenario.joint;
    bool initiated = false;
    if (options.apply_action) {
        initiated = apply_macro_action(state.ego, action, model.network);
    }
    int n_ticks = action.ticks(model.pomdp.dt);
    if (options.max_ticks >= 0) {
        n_ticks = std::min(n_ticks, options.max_ticks);
    }
    const RewardWeights& w = model.pomdp.reward;
    double discount = options.start_discount;
    std::vector<PhysicalState> scratch;
    scratch.reserve(1 + state.exos.size() + model.obstacles.size());
    out.tick_rewards.reserve(static_cast<std::size_t>(n_ticks));
    if (options.record_segment) {
        out.segment.reserve(static_cast<std::size_t>(n_ticks));
    }
    for (int k = 0; k < n_ticks; ++k) {
        state = step_joint(state, model, scratch);
        const bool collided = ego_collides(state, model);
        const double r = step_reward(state.ego.state, collided, initiated && k == 0,
                                     goal_distance(model.network, state.ego.state.lane, w), w, model.pomdp.dt);
        out.tick_rewards.push_back(discount * r);
        out.reward += discount * r;
        discount *= w.discount;
        ++out.ticks;
        if (options.record_segment) {
            out.segment.push_back(state);
        }
        if (collided) {
            out.collided = true;
            if (options.stop_on_collision) {
                out.terminal = true;
                break;
            }
        }
    }
    out.next_discount = discount;
    out.final_state = std::move(state);
    if (options.emit_observation) {
        out.final_obs = extract_observation(out.final_state, scenario.noise_seed, options.start_tick + out.ticks,
                                            model.pomdp.noise, model.pomdp.dt);
    }
    return out;
}

}  // namespace botdrive
