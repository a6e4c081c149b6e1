#pragma once

#include <vector>

#include "botdrive/planner.hpp"
#include "botdrive/pomdp.hpp"

namespace botdrive::oracle {

// One determinized scenario as seen from some belief node.
struct ScenarioPoint {
    JointState state;
    std::uint64_t noise_seed = 0;
};

// Exhaustive expectimax over the determinized scenarios. Every fitting
// macro-action is simulated in every scenario, outcomes are split by the
// planner's observation key, and the best action is taken at every branch.
// A node where no macro-action fits the horizon is worth its lane-follow
// rollout over the remaining time; a collided branch is worth nothing more.
// The value is a total over the given scenarios divided by root_count.
double expectimax(const std::vector<ScenarioPoint>& points, double depth, int tick, double discount,
                  const DrivingModel& model, const PlannerConfig& cfg, int root_count);

double expectimax_root(const std::vector<Scenario>& scenarios, const DrivingModel& model, const PlannerConfig& cfg);

}  // namespace botdrive::oracle
