#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "botdrive/config.hpp"
#include "botdrive/inference.hpp"
#include "botdrive/random.hpp"
#include "botdrive/pomdp.hpp"
#include "botdrive/scenario_spec.hpp"

namespace botdrive::testing {

// Parallel straight lanes 3.5 m apart along +x, ids 1..n from left to right.
// The goal is `goal` (defaults to the leftmost lane).
inline ScenarioSpec straight_spec(int lanes, double length = 400.0, int goal = 1) {
    ScenarioSpec spec;
    spec.name = "straight";
    for (int i = 1; i <= lanes; ++i) {
        LaneSpec l;
        l.id = i;
        const double y = 3.5 * static_cast<double>(lanes - i);
        l.centerline = {{0.0, y}, {length, y}};
        if (i > 1) {
            l.left = i - 1;
        }
        if (i < lanes) {
            l.right = i + 1;
        }
        spec.lanes.push_back(l);
    }
    spec.goal_lane = goal;
    spec.ego = Placement{goal, 20.0, 0.0, 10.0};
    spec.duration = 10.0;
    return spec;
}

inline ExoSpec exo_on(int id, int lane, double s, double speed, IntentionKind kind = IntentionKind::lane_follow,
                      double v0 = 10.0, double lookahead = 8.0) {
    ExoSpec e;
    e.id = id;
    e.start = Placement{lane, s, 0.0, speed};
    e.intention = kind;
    e.style = StyleParam{v0, lookahead};
    return e;
}

struct World {
    ScenarioSpec spec;
    Config config;
    DrivingModel model;
    JointState state;
};

inline World make_world(const ScenarioSpec& spec, const Config& config = {}) {
    World w{spec, config, build_model(spec, config), {}};
    w.state = initial_state(spec, w.model);
    return w;
}

inline RoadNetwork straight_network(int lanes, double length = 400.0) {
    return build_network(straight_spec(lanes, length));
}

inline PhysicalState on_lane(const RoadNetwork& network, int lane, double s, double d, double speed) {
    const Lane& l = network.lane(LaneId{lane});
    const Pose p = point_at_clamped(l, s);
    const Vec2 left{-std::sin(p.heading), std::cos(p.heading)};
    return anchored_state(network, p.position + left * d, p.heading, speed, LaneId{lane});
}

struct FilterRun {
    std::vector<double> lf_probability;  ///< per tick, tick 0 = prior
    std::vector<double> mean_desired_speed;
    JointBelief belief;
};

// Filter only: the truth evolves under its own driver models, the belief tracks
// exo-agent `agent` from noisy observations. Seeds mirror the closed loop.
inline FilterRun run_filter(const World& world, int ticks, std::uint64_t seed, AgentId agent = 1) {
    const DrivingModel& model = world.model;
    const double dt = model.pomdp.dt;
    const std::uint64_t obs_seed = mix_seed({seed, 0x6f6273});
    JointState truth = world.state;
    Observation obs = extract_observation(truth, obs_seed, 0, model.pomdp.noise, dt);
    FilterRun run;
    run.belief = init_belief(obs, model.network, model.driver.style_bounds, model.pomdp.noise,
                             world.config.inference, mix_seed({seed, 0x696e6974}));
    auto record = [&] {
        const AgentBelief& b = run.belief.agents.at(agent);
        run.lf_probability.push_back(b.probability(IntentionKind::lane_follow));
        run.mean_desired_speed.push_back(b.mean_style().desired_speed);
    };
    record();
    std::vector<PhysicalState> scratch;
    for (int t = 1; t <= ticks; ++t) {
        const AgentState previous_ego = truth.ego;
        truth = step_joint(truth, model, scratch);
        obs = extract_observation(truth, obs_seed, t, model.pomdp.noise, dt);
        run.belief = update_belief(run.belief, obs, previous_ego, model, world.config.inference,
                                   mix_seed({seed, 0x7066, static_cast<std::uint64_t>(t)}))
                         .belief;
        record();
    }
    return run;
}

// One exo-agent (id 1) with a single particle per legal intention, probabilities
// in kAllIntentionKinds order over the legal ones. Lane changers start committed
// when `committed` is set.
inline JointBelief single_particle_belief(const RoadNetwork& network, const PhysicalState& state,
                                          const std::vector<double>& probs, bool committed = false,
                                          StyleParam style = {8.0, 6.0}) {
    AgentBelief b;
    b.last_observed = state;
    std::size_t i = 0;
    for (IntentionKind kind : kAllIntentionKinds) {
        auto m = make_intention(kind, state.lane, network);
        if (!m) {
            continue;
        }
        m->committed = committed && is_lane_change(kind);
        IntentionHypothesis h;
        h.kind = kind;
        h.target_lane = m->target_lane;
        h.probability = probs.at(i++);
        Particle p;
        p.state = state;
        p.intention = *m;
        p.style = style;
        p.weight = 1.0;
        h.particles = {p};
        b.hypotheses.push_back(h);
    }
    JointBelief jb;
    jb.agents.emplace(1, b);
    return jb;
}

// Three lanes, one lane-following exo-agent on the middle lane with the given v0;
// the ego trails on the right lane out of its way.
inline World lf_filter_world(double v0) {
    ScenarioSpec spec = straight_spec(3, 600.0, 1);
    spec.ego = Placement{3, 10.0, 0.0, 8.0};
    spec.exos = {exo_on(1, 2, 60.0, 8.0, IntentionKind::lane_follow, v0, 8.0)};
    spec.duration = 10.0;
    return make_world(spec);
}

}  // namespace botdrive::testing
