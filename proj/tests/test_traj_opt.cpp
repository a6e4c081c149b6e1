#include <doctest.h>

#include <cmath>
#include <numeric>

#include "botdrive/planner.hpp"
#include "botdrive/scene_generator.hpp"
#include "botdrive/traj_opt.hpp"
#include "is_enumeration.hpp"
#include "support.hpp"

using namespace botdrive;
using testing::on_lane;

namespace {

JointBelief belief_with(const RoadNetwork& net, int lane, const std::vector<double>& probs) {
    return testing::single_particle_belief(net, on_lane(net, lane, 60.0, 0.0, 8.0), probs);
}

std::vector<double> qs(const Proposal& p, AgentId id) {
    std::vector<double> out;
    for (const auto& e : p.agents.at(id)) {
        out.push_back(e.q);
    }
    return out;
}

Candidate straight_candidate(const RoadNetwork& net, double speed, int ticks, double dt) {
    Candidate c;
    c.speed_scale = 1.0;
    for (int t = 0; t <= ticks; ++t) {
        AgentState a;
        a.state = on_lane(net, 1, 20.0 + speed * dt * t, 0.0, speed);
        c.trajectory.push_back(a);
    }
    return c;
}

}  // namespace

TEST_CASE("proposal mixture arithmetic") {
    const RoadNetwork net = testing::straight_network(3);
    const Proposal p = build_proposal(belief_with(net, 2, {1.0, 0.0, 0.0}), 0.5);
    const auto q = qs(p, 1);
    CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    const JointBelief skew = belief_with(net, 2, {0.7, 0.2, 0.1});
    const Proposal same = build_proposal(skew, 0.0);
    for (const auto& e : same.agents.at(1)) {
        CHECK(e.q == e.p);
    }
    const Proposal flat = build_proposal(belief_with(net, 2, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}), 0.8);
    for (double x : qs(flat, 1)) {
        CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    for (double mix : {0.1, 0.3, 0.5, 0.8, 1.0}) {
        const auto mq = qs(build_proposal(skew, mix), 1);
        for (double x : mq) {
            CHECK(x >= mix / 3.0 - 1e-15);
        }
    }
    CHECK_THROWS(build_proposal(skew, 1.5));
}

TEST_CASE("importance weights are ratios p/q") {
    const RoadNetwork net = testing::straight_network(2);
    // lane 1 of 2: legal intentions LF and LC_R; q = 0.5 p + 0.25
    const JointBelief b = belief_with(net, 1, {0.8, 0.2});
    const Proposal p = build_proposal(b, 0.5);
    CHECK(qs(p, 1)[0] == doctest::Approx(0.65));
    CHECK(qs(p, 1)[1] == doctest::Approx(0.35));
    const auto draws = resample(p, b, AgentState{}, 2000, 3);
    int first = 0;
    for (const auto& ws : draws) {
        if (ws.drawn[0] == IntentionKind::lane_follow) {
            CHECK(ws.weight == doctest::Approx(1.2308).epsilon(1e-4));
            CHECK(ws.weight == 0.8 / 0.65);
            ++first;
        } else {
            CHECK(ws.weight == doctest::Approx(0.5714).epsilon(1e-4));
            CHECK(ws.weight == 0.2 / 0.35);
        }
        CHECK(std::isfinite(ws.weight));
        CHECK(ws.weight > 0.0);
    }
    CHECK(std::abs(first / 2000.0 - 0.65) < 0.04);
}

TEST_CASE("importance weights average to one under q") {
    const RoadNetwork net = testing::straight_network(3);
    const JointBelief b = belief_with(net, 2, {0.85, 0.1, 0.05});
    for (double mix : {0.3, 0.5, 0.8}) {
        const auto draws = resample(build_proposal(b, mix), b, AgentState{}, 10000, 11);
        double total = 0.0;
        for (const auto& ws : draws) {
            total += ws.weight;
        }
        CHECK(std::abs(total / 10000.0 - 1.0) < 0.02);
    }
    for (const auto& ws : resample(build_proposal(b, 0.0), b, AgentState{}, 500, 2)) {
        CHECK(ws.weight == 1.0);
    }
    CHECK(resample(build_proposal(b, 0.5), b, AgentState{}, 40, 9)[7].scenario ==
          resample(build_proposal(b, 0.5), b, AgentState{}, 40, 9)[7].scenario);
}

TEST_CASE("a single candidate is the planner's simulated ego segment") {
    const testing::World w = testing::make_world(generate_scene("merge", {}, 1));
    TrajOptConfig cfg;
    cfg.speed_scales = {1.0};
    const Scenario sc{w.state, 5};
    for (const MacroAction& a : legal_actions(w.state.ego, w.model.network, w.model.pomdp)) {
        const auto cands = generate_candidates({sc}, {a}, w.state.ego, w.model, cfg);
        REQUIRE(cands.size() == 1);
        SimOptions o;
        o.record_segment = true;
        const SimOutcome sim = simulate(sc, a, w.model, o);
        REQUIRE(cands[0].trajectory.size() == sim.segment.size() + 1);
        for (std::size_t t = 0; t < sim.segment.size(); ++t) {
            CHECK(cands[0].trajectory[t + 1] == sim.segment[t].ego);
        }
        CHECK(evaluate_candidate(cands[0], sc, w.model) == sim.reward);
    }
}

TEST_CASE("identical scenarios deduplicate; slower scales travel less") {
    const testing::World w = testing::make_world(testing::straight_spec(2));
    const Scenario sc{w.state, 5};
    const MacroAction lf{IntentionKind::lane_follow, 2.0};
    const auto cands = generate_candidates({sc, sc, sc, sc}, {lf}, w.state.ego, w.model, TrajOptConfig{});
    CHECK(cands.size() <= 3);
    CHECK(cands.size() >= 1);
    TrajOptConfig slow;
    slow.speed_scales = {0.7};
    TrajOptConfig nominal;
    nominal.speed_scales = {1.0};
    const double s_slow = generate_candidates({sc}, {lf}, w.state.ego, w.model, slow)[0].trajectory.back().state.s;
    const double s_nom = generate_candidates({sc}, {lf}, w.state.ego, w.model, nominal)[0].trajectory.back().state.s;
    CHECK(s_slow < s_nom);
}

TEST_CASE("candidates are kinematically feasible") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const testing::World w = testing::make_world(generate_scene("merge", {}, seed));
        const auto scenarios = sample_scenarios(
            init_belief(extract_observation(w.state, seed, 0, w.model.pomdp.noise, 0.2), w.model.network, {},
                        w.model.pomdp.noise, InferenceConfig{}, seed),
            w.state.ego, 10, seed);
        for (const MacroAction& a : legal_actions(w.state.ego, w.model.network, w.model.pomdp)) {
            const auto cands = generate_candidates(scenarios, {a}, w.state.ego, w.model, TrajOptConfig{});
            CHECK(cands.size() <= 30);
            for (const Candidate& c : cands) {
                for (std::size_t t = 1; t < c.trajectory.size(); ++t) {
                    const double acc = (c.trajectory[t].state.speed - c.trajectory[t - 1].state.speed) / 0.2;
                    CHECK(std::abs(acc) <= w.model.driver.emergency_decel + 1e-9);
                    CHECK(std::abs(c.trajectory[t].state.yaw_rate) <= w.model.driver.yaw_rate_max + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("one candidate, one scenario, unit weight: the estimate is the rollout value") {
    const testing::World w = testing::make_world(generate_scene("merge", {}, 2));
    const Scenario sc{w.state, 5};
    TrajOptConfig cfg;
    cfg.speed_scales = {0.85};
    const auto cands = generate_candidates({sc}, {MacroAction{IntentionKind::lane_follow, 2.0}}, w.state.ego, w.model, cfg);
    const CrossEvaluation ev = cross_evaluate(cands, {{sc, 1.0, {}}}, w.model);
    CHECK(ev.estimates.at(0) == evaluate_candidate(cands[0], sc, w.model));
    CHECK(ev.selected == 0);
}

TEST_CASE("a colliding candidate is never selected over a safe one") {
    ScenarioSpec spec = testing::straight_spec(1);
    spec.exos = {testing::exo_on(1, 1, 38.0, 0.0, IntentionKind::lane_follow, 2.0)};
    const testing::World w = testing::make_world(spec);
    const Candidate crash = straight_candidate(w.model.network, 10.0, 10, 0.2);   // reaches s = 40
    Candidate safe = straight_candidate(w.model.network, 5.0, 10, 0.2);           // stops short at s = 30
    safe.speed_scale = 0.7;
    const Scenario sc{w.state, 1};
    CHECK(evaluate_candidate(crash, sc, w.model) < -w.model.pomdp.reward.collision);
    const CrossEvaluation ev = cross_evaluate({crash, safe}, {{sc, 0.3, {}}, {sc, 2.0, {}}}, w.model);
    CHECK(ev.selected == 1);
    for (double e : ev.estimates) {
        CHECK(ev.estimates[ev.selected] >= e);
    }
}

TEST_CASE("estimate ties prefer the nominal speed") {
    const testing::World w = testing::make_world(testing::straight_spec(1));
    Candidate a = straight_candidate(w.model.network, 10.0, 10, 0.2);
    a.speed_scale = 0.85;
    Candidate b = a;
    b.speed_scale = 1.0;
    const CrossEvaluation ev = cross_evaluate({a, b}, {{Scenario{w.state, 1}, 1.0, {}}}, w.model);
    CHECK(ev.estimates[0] == ev.estimates[1]);
    CHECK(ev.selected == 1);
}

TEST_CASE("importance-sampled estimate matches enumeration") {
    const testing::World w = testing::make_world(testing::straight_spec(3, 400.0, 1));
    const RoadNetwork& net = w.model.network;
    // ego in the middle lane, one agent just ahead on the left
    AgentState ego = w.state.ego;
    ego.state = on_lane(net, 2, 30.0, 0.0, 10.0);
    JointBelief b = belief_with(net, 3, {0.9, 0.1});
    b.agents.at(1).hypotheses[0].particles[0].state = on_lane(net, 3, 40.0, 0.0, 6.0);
    b.agents.at(1).hypotheses[1].particles[0].state = on_lane(net, 3, 40.0, 0.0, 6.0);
    TrajOptConfig cfg;
    cfg.speed_scales = {1.0};
    const Scenario base{JointState{ego, {}}, 1};
    const auto cands = generate_candidates({base}, {MacroAction{IntentionKind::lane_follow, 2.0}}, ego, w.model, cfg);
    const double exact = oracle::enumerate_candidate_value(cands[0], b, ego, w.model);
    REQUIRE(exact < 0.0);
    for (double mix : {0.0, 0.5}) {
        const auto draws = resample(build_proposal(b, mix), b, ego, 10000, 4);
        const CrossEvaluation ev = cross_evaluate(cands, draws, w.model);
        CHECK(std::abs(ev.estimates[0] - exact) / std::abs(exact) < 0.02);
    }
}

TEST_CASE("refinement on the planner's scenarios reproduces its per-scenario rewards") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const testing::World w = testing::make_world(generate_scene("merge", {}, seed));
        const JointBelief b = init_belief(extract_observation(w.state, seed, 0, w.model.pomdp.noise, 0.2),
                                          w.model.network, {}, w.model.pomdp.noise, InferenceConfig{}, seed);
        const PolicyTree tree = plan(b, w.state.ego, w.model, PlannerConfig{}, seed);
        const ActionNode* root = tree.root->child(tree.root_action.kind);
        REQUIRE(root != nullptr);
        TrajOptConfig cfg;
        cfg.mix = 0.0;
        cfg.speed_scales = {1.0};
        cfg.dedup_distance = 0.0;
        const auto cands = generate_candidates(tree.scenarios, tree.most_likely_sequence, w.state.ego, w.model, cfg);
        REQUIRE(cands.size() == tree.scenarios.size());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            CHECK(std::abs(evaluate_candidate(cands[i], tree.scenarios[i], w.model) - root->scenario_rewards[i]) < 1e-6);
        }
        // with a single scenario the estimate is the root action's mean reward
        const Refinement one = refine_on_scenarios({tree.scenarios[0]}, w.state.ego, tree.most_likely_sequence,
                                                   w.model, cfg);
        CHECK(std::abs(one.evaluation.estimates[0] - root->scenario_rewards[0]) < 1e-6);
    }
}
