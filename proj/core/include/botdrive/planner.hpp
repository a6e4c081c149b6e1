#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "botdrive/inference.hpp"
#include "botdrive/pomdp.hpp"

namespace botdrive {

struct PlannerBudget {
    int max_expansions = 40;
    /// Wall-clock limit; 0 disables it (keeps planning reproducible).
    double max_ms = 0.0;
};

struct PlannerConfig {
    int num_scenarios = 20;
    double horizon = 9.0;
    PlannerBudget budget;
    /// Regularization weight per policy node; 0 disables it.
    double regularization = 0.0;
    /// Target gap fraction for the weighted excess uncertainty.
    double xi = 0.95;
    double s_bucket = 2.0;
    double speed_bucket = 1.0;
    double convergence_gap = 1e-9;
    /// Plan on the single most likely scenario instead of K samples.
    bool max_likelihood_only = false;
};

/// Discretized final observation of a macro-action: per agent (id, lane, s bucket,
/// speed bucket) plus the ego's own (lane, s bucket, speed bucket, driver phase).
/// Scenarios that end in a collision share the terminal key.
struct ObservationKey {
    bool terminal = false;
    std::vector<std::int64_t> cells;

    auto operator<=>(const ObservationKey&) const = default;
    bool operator==(const ObservationKey&) const = default;
};

ObservationKey make_observation_key(const JointState& final_state, const Observation& final_obs,
                                    const RoadNetwork& network, const PlannerConfig& cfg);

struct BeliefNode;

struct ActionNode {
    MacroAction action;
    /// Discounted macro-action reward per scenario, aligned with the parent's scenario_ids.
    std::vector<double> scenario_rewards;
    /// Sum of scenario_rewards divided by the root scenario count.
    double reward = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double regularized = 0.0;
    std::map<ObservationKey, std::unique_ptr<BeliefNode>> children;
};

/// Node of the sparse belief tree. Values are totals over the node's scenarios
/// divided by the root scenario count, so children sum to their parent.
struct BeliefNode {
    std::vector<int> scenario_ids;
    std::vector<JointState> states;  ///< aligned with scenario_ids
    double depth = 0.0;              ///< seconds of simulated time from the root
    int tick = 0;
    double discount = 1.0;
    double default_lower = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double regularized = 0.0;
    bool expanded = false;
    bool terminal = false;
    std::vector<ActionNode> children;

    const ActionNode* child(IntentionKind kind) const;
};

struct PlannerStats {
    int expansions = 0;
    int nodes = 0;
    double root_lower = 0.0;
    double root_upper = 0.0;
    double max_depth = 0.0;
    double elapsed_ms = 0.0;
    bool expanded_root = false;
};

struct PolicyTree {
    MacroAction root_action;
    std::vector<MacroAction> most_likely_sequence;
    PlannerStats stats;
    std::vector<Scenario> scenarios;
    std::unique_ptr<BeliefNode> root;
};

/// Discounted value of lane following from `depth` to the horizon.
double default_policy_value(const Scenario& scenario, double depth, double horizon, const DrivingModel& model,
                            int start_tick = 0, double start_discount = 1.0);

/// Optimistic value: no collision, zero speed deviation and the goal lane reached
/// after the cheapest number of back-to-back lane changes.
double upper_bound_value(const AgentState& ego, double depth, double horizon, const DrivingModel& model,
                         double start_discount = 1.0);

/// Samples scenarios from the belief (or takes the most likely one) and searches.
PolicyTree plan(const JointBelief& belief, const AgentState& ego, const DrivingModel& model,
                const PlannerConfig& cfg, std::uint64_t seed);

/// Anytime search over a fixed scenario set.
PolicyTree plan_scenarios(std::vector<Scenario> scenarios, const DrivingModel& model, const PlannerConfig& cfg);

/// Root action, then the best action along the most populated observation branch.
std::vector<MacroAction> extract_sequence(const PolicyTree& tree);

/// Visits every belief node (pre-order).
template <typename Fn>
void for_each_node(const BeliefNode& node, Fn&& fn) {
    fn(node);
    for (const ActionNode& a : node.children) {
        for (const auto& [key, child] : a.children) {
            for_each_node(*child, fn);
        }
    }
}

}  // namespace botdrive
