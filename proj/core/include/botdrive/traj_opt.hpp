#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "botdrive/inference.hpp"
#include "botdrive/pomdp.hpp"

namespace botdrive {

struct TrajOptConfig {
    /// Weight of the uniform component in the proposal.
    double mix = 0.5;
    int num_samples = 30;
    std::vector<double> speed_scales{0.7, 0.85, 1.0};
    /// Candidates closer than this everywhere are merged.
    double dedup_distance = 0.2;
};

struct ProposalEntry {
    IntentionKind kind = IntentionKind::lane_follow;
    double p = 0.0;
    double q = 0.0;
};

/// Per exo-agent proposal over its legal intentions.
struct Proposal {
    std::map<AgentId, std::vector<ProposalEntry>> agents;
};

Proposal build_proposal(const JointBelief& belief, double mix);

struct WeightedScenario {
    Scenario scenario;
    double weight = 1.0;
    /// Intention drawn for each exo-agent, in belief order.
    std::vector<IntentionKind> drawn;
};

/// Draws intentions from q, states and styles from the matching filtered particles,
/// and weights each scenario by prod p/q.
std::vector<WeightedScenario> resample(const Proposal& proposal, const JointBelief& belief, const AgentState& ego,
                                       int count, std::uint64_t seed);

struct Candidate {
    /// Ego state at every tick of the first macro-action, starting with the current state.
    std::vector<AgentState> trajectory;
    int scenario = 0;
    double speed_scale = 1.0;
    MacroAction action;
    bool lane_change_initiated = false;
};

std::vector<Candidate> generate_candidates(const std::vector<Scenario>& scenarios,
                                           const std::vector<MacroAction>& planned_sequence, const AgentState& ego,
                                           const DrivingModel& model, const TrajOptConfig& cfg);

/// Discounted reward of the ego replaying a fixed trajectory while the scenario's
/// exo-agents react to it.
double evaluate_candidate(const Candidate& candidate, const Scenario& scenario, const DrivingModel& model);

struct CrossEvaluation {
    /// values[c][i]: candidate c replayed in scenario i.
    std::vector<std::vector<double>> values;
    std::vector<double> weights;
    std::vector<double> estimates;
    std::size_t selected = 0;
};

CrossEvaluation cross_evaluate(const std::vector<Candidate>& candidates,
                               const std::vector<WeightedScenario>& scenarios, const DrivingModel& model);

struct Refinement {
    Candidate selected;
    CrossEvaluation evaluation;
    std::size_t candidate_count = 0;
};

/// Full refinement step: proposal, resampling, candidates and argmax.
Refinement refine_trajectory(const JointBelief& belief, const AgentState& ego,
                             const std::vector<MacroAction>& planned_sequence, const DrivingModel& model,
                             const TrajOptConfig& cfg, std::uint64_t seed);

/// Same, on a fixed scenario set with unit weights.
Refinement refine_on_scenarios(const std::vector<Scenario>& scenarios, const AgentState& ego,
                               const std::vector<MacroAction>& planned_sequence, const DrivingModel& model,
                               const TrajOptConfig& cfg);

}  // namespace botdrive
