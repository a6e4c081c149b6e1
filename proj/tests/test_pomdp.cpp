#include <doctest.h>

#include <cmath>
#include <numbers>

#include "botdrive/pomdp.hpp"
#include "botdrive/scene_generator.hpp"
#include "support.hpp"

using namespace botdrive;
using testing::on_lane;

namespace {

std::vector<IntentionKind> kinds(const std::vector<MacroAction>& actions) {
    std::vector<IntentionKind> out;
    for (const auto& a : actions) {
        out.push_back(a.kind);
    }
    return out;
}

AgentState ego_on(const RoadNetwork& net, int lane, double s, double speed) {
    AgentState a;
    a.state = on_lane(net, lane, s, 0.0, speed);
    a.style = StyleParam{10.0, 8.0};
    return a;
}

}  // namespace

TEST_CASE("macro-action durations are whole numbers of ticks") {
    const PomdpConfig cfg;
    const MacroAction lf = make_macro_action(IntentionKind::lane_follow, cfg);
    const MacroAction lc = make_macro_action(IntentionKind::lane_change_right, cfg);
    CHECK(lf.duration == 2.0);
    CHECK(lc.duration == 4.0);
    CHECK(lf.ticks(cfg.dt) == 10);
    CHECK(lc.ticks(cfg.dt) == 20);
}

TEST_CASE("legal actions follow the lane topology") {
    const RoadNetwork net = testing::straight_network(3);
    const PomdpConfig cfg;
    using K = IntentionKind;
    CHECK(kinds(legal_actions(ego_on(net, 1, 50, 8), net, cfg)) == std::vector<K>{K::lane_follow, K::lane_change_right});
    CHECK(kinds(legal_actions(ego_on(net, 2, 50, 8), net, cfg)) ==
          std::vector<K>{K::lane_follow, K::lane_change_left, K::lane_change_right});
    CHECK(kinds(legal_actions(ego_on(net, 3, 50, 8), net, cfg)) == std::vector<K>{K::lane_follow, K::lane_change_left});
    const RoadNetwork single = testing::straight_network(1);
    CHECK(kinds(legal_actions(ego_on(single, 1, 50, 8), single, cfg)) == std::vector<K>{K::lane_follow});

    AgentState mid = ego_on(net, 2, 50, 8);
    mid.intention = Intention{K::lane_change_left, LaneId{1}, true};
    CHECK(kinds(legal_actions(mid, net, cfg)) == std::vector<K>{K::lane_follow});
}

TEST_CASE("applying macro-actions") {
    const RoadNetwork net = testing::straight_network(3);
    AgentState ego = ego_on(net, 2, 50, 8);
    CHECK(apply_macro_action(ego, make_macro_action(IntentionKind::lane_change_left, {}), net));
    CHECK(ego.intention.target_lane == LaneId{1});
    CHECK_FALSE(apply_macro_action(ego, make_macro_action(IntentionKind::lane_follow, {}), net));
    CHECK(ego.intention.kind == IntentionKind::lane_follow);
    AgentState left = ego_on(net, 1, 50, 8);
    CHECK_THROWS_AS(apply_macro_action(left, make_macro_action(IntentionKind::lane_change_left, {}), net),
                    IllegalIntention);
    // a committed change keeps running whatever is asked
    ego.intention = Intention{IntentionKind::lane_change_right, LaneId{3}, true};
    CHECK_FALSE(apply_macro_action(ego, make_macro_action(IntentionKind::lane_follow, {}), net));
    CHECK(ego.intention.kind == IntentionKind::lane_change_right);
}

TEST_CASE("step reward: cubic collision penalty") {
    const RewardWeights w;
    PhysicalState s;
    s.speed = 0.0;
    const double base0 = step_reward(s, false, false, 0.0, w, 0.2);
    CHECK(step_reward(s, true, false, 0.0, w, 0.2) - base0 == doctest::Approx(-w.collision).epsilon(1e-14));
    s.speed = 2.0;
    const double base2 = step_reward(s, false, false, 0.0, w, 0.2);
    const double pen2 = step_reward(s, true, false, 0.0, w, 0.2) - base2;
    CHECK(pen2 / -w.collision == doctest::Approx(27.0).epsilon(1e-14));
}

TEST_CASE("step reward: penalty-free state and each term") {
    const RewardWeights w;
    PhysicalState s;
    s.speed = w.desired_speed;
    CHECK(step_reward(s, false, false, 0.0, w, 0.2) == 0.0);
    CHECK(step_reward(s, false, true, 0.0, w, 0.2) == doctest::Approx(-w.lane_change));
    CHECK(step_reward(s, false, false, 2.0, w, 0.2) == doctest::Approx(-w.goal * (std::exp(2.0) - 1.0) * 0.2));
    s.speed = 6.0;
    CHECK(step_reward(s, false, false, 0.0, w, 0.2) == doctest::Approx(-w.efficiency * 4.0 * 0.2));
}

TEST_CASE("step reward is never positive") {
    const RewardWeights w;
    SplitMix64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        PhysicalState s;
        s.speed = 25.0 * rng.uniform();
        const double r =
            step_reward(s, rng.uniform() < 0.3, rng.uniform() < 0.3, std::floor(4.0 * rng.uniform()), w, 0.2);
        CHECK(r <= 0.0);
        CHECK(std::isfinite(r));
    }
}

TEST_CASE("goal distance") {
    const RoadNetwork net = testing::straight_network(3);
    const RewardWeights w;
    CHECK(goal_distance(net, LaneId{1}, w) == 0.0);
    CHECK(goal_distance(net, LaneId{3}, w) == 2.0);
    const RoadNetwork merge = build_network(generate_scene("merge", {}, 0));
    for (const Lane& l : merge.lanes()) {
        const double d = goal_distance(merge, l.id, w);
        CHECK(d == static_cast<double>(merge.lane_change_distance(l.id, merge.goal_lane()).value_or(3)));
    }
}

TEST_CASE("simulate: penalty-free rollout on an empty road") {
    const testing::World w = testing::make_world(testing::straight_spec(2));
    const Scenario sc{w.state, 1};
    const SimOutcome out = simulate(sc, make_macro_action(IntentionKind::lane_follow, w.model.pomdp), w.model);
    CHECK(out.reward == 0.0);
    CHECK_FALSE(out.terminal);
    CHECK(out.ticks == 10);
    CHECK(out.final_state.ego.state.s == doctest::Approx(w.state.ego.state.s + 20.0).epsilon(1e-12));
    CHECK(out.next_discount == doctest::Approx(std::pow(0.98, 10)).epsilon(1e-14));
}

TEST_CASE("simulate: forced collision terminates early") {
    ScenarioSpec spec = testing::straight_spec(1);
    spec.ego = Placement{1, 20.0, 0.0, 10.0};
    testing::World w = testing::make_world(spec);
    // oncoming car in the same lane, closing at 20 m/s from 14.5 m
    AgentState oncoming;
    oncoming.id = 1;
    oncoming.state = anchored_state(w.model.network, {34.5, 0.0}, std::numbers::pi, 10.0, LaneId{1});
    oncoming.style = StyleParam{10.0, 8.0};
    w.state.exos = {oncoming};
    SimOptions o;
    o.record_segment = true;
    const SimOutcome out = simulate(Scenario{w.state, 3}, make_macro_action(IntentionKind::lane_follow, {}), w.model, o);
    CHECK(out.terminal);
    CHECK(out.collided);
    CHECK(out.ticks == 3);
    CHECK(out.segment.size() == 3);
    CHECK(out.tick_rewards.size() == 3);
    CHECK(out.tick_rewards.back() < -w.model.pomdp.reward.collision * 0.9);
}

TEST_CASE("simulate is deterministic") {
    const ScenarioSpec spec = generate_scene("merge", {}, 4);
    const testing::World w = testing::make_world(spec);
    SimOptions o;
    o.record_segment = true;
    for (const MacroAction& a : legal_actions(w.state.ego, w.model.network, w.model.pomdp)) {
        const SimOutcome x = simulate(Scenario{w.state, 42}, a, w.model, o);
        const SimOutcome y = simulate(Scenario{w.state, 42}, a, w.model, o);
        CHECK(x.reward == y.reward);
        CHECK(x.tick_rewards == y.tick_rewards);
        CHECK(x.final_state == y.final_state);
        CHECK(x.final_obs == y.final_obs);
        CHECK(x.segment == y.segment);
    }
}

TEST_CASE("simulate without exo-agents reproduces the single-driver trace") {
    const testing::World w = testing::make_world(testing::straight_spec(3, 400.0, 1));
    AgentState ego = w.state.ego;
    ego.state = on_lane(w.model.network, 3, 20.0, 0.0, 7.0);
    const MacroAction lc = make_macro_action(IntentionKind::lane_change_left, w.model.pomdp);
    SimOptions o;
    o.record_segment = true;
    const SimOutcome out = simulate(Scenario{JointState{ego, {}}, 0}, lc, w.model, o);
    AgentState manual = ego;
    apply_macro_action(manual, lc, w.model.network);
    REQUIRE(out.segment.size() == 20);
    for (const JointState& js : out.segment) {
        const DriverStep step = step_driver(manual.state, manual.intention, manual.style, Traffic{}, w.model.network,
                                            w.model.driver, w.model.pomdp.dt, {ConnectorPolicy::goal_directed, 0});
        manual.state = step.state;
        manual.intention = step.intention;
        CHECK(js.ego.state == manual.state);
        CHECK(js.ego.intention == manual.intention);
    }
}

TEST_CASE("discount composition: one lane change equals two chained halves") {
    const ScenarioSpec spec = generate_scene("merge", {}, 2);
    const testing::World w = testing::make_world(spec);
    const MacroAction lc = make_macro_action(IntentionKind::lane_change_left, w.model.pomdp);
    const Scenario sc{w.state, 9};
    const SimOutcome whole = simulate(sc, lc, w.model);
    REQUIRE_FALSE(whole.terminal);

    SimOptions first;
    first.max_ticks = 10;
    const SimOutcome a = simulate(sc, lc, w.model, first);
    SimOptions second;
    second.apply_action = false;
    second.start_tick = a.ticks;
    second.start_discount = a.next_discount;
    second.max_ticks = 10;
    const SimOutcome b = simulate(Scenario{a.final_state, sc.noise_seed}, lc, w.model, second);

    std::vector<double> chained = a.tick_rewards;
    chained.insert(chained.end(), b.tick_rewards.begin(), b.tick_rewards.end());
    CHECK(chained == whole.tick_rewards);
    CHECK(a.reward + b.reward == doctest::Approx(whole.reward).epsilon(1e-12));
    CHECK(b.next_discount == whole.next_discount);
    CHECK(b.final_state == whole.final_state);
    CHECK(b.final_obs == whole.final_obs);
    CHECK(whole.reward < 0.0);
}

TEST_CASE("macro-action reward stays within the per-action bounds") {
    const RewardWeights wts;
    const double v_max = 20.0;
    const double d_max = 3.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ScenarioSpec spec = generate_scene("merge", {}, seed);
        testing::World w = testing::make_world(spec);
        w.state.ego.state.speed = 20.0 * SplitMix64(seed).uniform();
        for (const MacroAction& a : legal_actions(w.state.ego, w.model.network, w.model.pomdp)) {
            const SimOutcome out = simulate(Scenario{w.state, seed}, a, w.model);
            const double floor = -(wts.collision * std::pow(1.0 + v_max, 3) +
                                   a.duration * (wts.efficiency * v_max + wts.goal * (std::exp(d_max) - 1.0)) +
                                   wts.lane_change);
            CHECK(out.reward <= 0.0);
            CHECK(out.reward >= floor);
        }
    }
}

TEST_CASE("observations: zero noise is the truth, draws are keyed by seed, tick and agent") {
    const testing::World w = testing::make_world(generate_scene("merge", {}, 1));
    const Observation exact = extract_observation(w.state, 5, 3, ObservationNoise{0.0, 0.0, 0.0}, 0.2);
    REQUIRE(exact.agents.size() == w.state.exos.size());
    for (std::size_t i = 0; i < exact.agents.size(); ++i) {
        CHECK(exact.agents[i].position == w.state.exos[i].state.position);
        CHECK(exact.agents[i].heading == w.state.exos[i].state.heading);
        CHECK(exact.agents[i].speed == w.state.exos[i].state.speed);
    }
    CHECK(exact.timestamp == doctest::Approx(0.6));
    const ObservationNoise noise;
    CHECK(extract_observation(w.state, 5, 3, noise, 0.2) == extract_observation(w.state, 5, 3, noise, 0.2));
    CHECK_FALSE(extract_observation(w.state, 5, 3, noise, 0.2) == extract_observation(w.state, 5, 4, noise, 0.2));
    CHECK_FALSE(extract_observation(w.state, 5, 3, noise, 0.2) == extract_observation(w.state, 6, 3, noise, 0.2));
    // one agent's draw does not depend on who else is visible
    JointState fewer = w.state;
    fewer.exos.erase(fewer.exos.begin());
    CHECK(extract_observation(fewer, 5, 3, noise, 0.2).agents[0] == extract_observation(w.state, 5, 3, noise, 0.2).agents[1]);
}

TEST_CASE("observation noise has the configured spread") {
    const testing::World w = testing::make_world(generate_scene("merge", {}, 1));
    JointState one = w.state;
    one.exos.resize(1);
    const PhysicalState truth = one.exos[0].state;
    const ObservationNoise noise{0.3, 0.05, 0.4};
    double sx = 0, sxx = 0, sy = 0, syy = 0, sh = 0, shh = 0, sv = 0, svv = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
        const AgentObservation o = extract_observation(one, 17, t, noise, 0.2).agents[0];
        const double dx = o.position.x - truth.position.x;
        const double dy = o.position.y - truth.position.y;
        const double dh = wrap_angle(o.heading - truth.heading);
        const double dv = o.speed - truth.speed;
        sx += dx, sxx += dx * dx, sy += dy, syy += dy * dy, sh += dh, shh += dh * dh, sv += dv, svv += dv * dv;
    }
    auto sd = [n](double s, double ss) { return std::sqrt(ss / n - (s / n) * (s / n)); };
    CHECK(sd(sx, sxx) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(sd(sy, syy) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(sd(sh, shh) == doctest::Approx(0.05).epsilon(0.02));
    CHECK(sd(sv, svv) == doctest::Approx(0.4).epsilon(0.02));
    CHECK(std::abs(sx / n) < 0.01);
}

TEST_CASE("anchoring") {
    const RoadNetwork net = testing::straight_network(2);
    const PhysicalState s = anchored_state(net, {30.0, 0.4}, 0.0, 5.0);
    CHECK(s.lane == LaneId{2});
    CHECK(s.s == doctest::Approx(30.0));
    CHECK(s.d == doctest::Approx(0.4));
    CHECK_THROWS_AS(anchored_state(net, {30.0, 40.0}, 0.0, 5.0), NoLaneWithinRadius);
}

TEST_CASE("collision check includes parked vehicles") {
    ScenarioSpec spec = testing::straight_spec(1);
    spec.obstacles = {Placement{1, 23.0, 0.0, 0.0}};
    const testing::World w = testing::make_world(spec);
    CHECK(ego_collides(w.state, w.model));
    spec.obstacles = {Placement{1, 30.0, 0.0, 0.0}};
    const testing::World far = testing::make_world(spec);
    CHECK_FALSE(ego_collides(far.state, far.model));
}
