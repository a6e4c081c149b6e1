#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "botdrive/driver_models.hpp"
#include "botdrive/pomdp.hpp"

namespace botdrive {

struct InferenceConfig {
    int particles_per_intention = 100;
    /// Style jitter at resampling, as a fraction of each parameter's range.
    double style_jitter_fraction = 0.02;
    /// State roughening at resampling.
    double position_jitter = 0.05;
    double heading_jitter = 0.005;
    double speed_jitter = 0.05;
    double likelihood_floor = 1e-12;
    double intention_floor = 1e-4;
    /// Resample when ESS < fraction * N.
    double resample_ess_fraction = 0.5;
    /// Share of particles redrawn around the current observation after each
    /// resampling; half of the redrawn lane-change particles start committed.
    double regeneration_fraction = 0.1;
};

struct Particle {
    PhysicalState state;
    Intention intention;
    StyleParam style;
    double weight = 0.0;
    std::uint64_t connector_seed = 0;

    bool operator==(const Particle&) const = default;
};

/// One driver-model hypothesis m with its particle belief over (x, theta).
struct IntentionHypothesis {
    IntentionKind kind = IntentionKind::lane_follow;
    std::optional<LaneId> target_lane;
    double probability = 0.0;
    std::vector<Particle> particles;

    bool operator==(const IntentionHypothesis&) const = default;
};

struct AgentBelief {
    /// Legal intentions only, in LF, LC_L, LC_R order.
    std::vector<IntentionHypothesis> hypotheses;
    /// Last observed state, used as this agent's pose when propagating its neighbors.
    PhysicalState last_observed;

    double probability(IntentionKind kind) const;
    const IntentionHypothesis* find(IntentionKind kind) const;
    /// Posterior mean style over all hypotheses and particles.
    StyleParam mean_style() const;

    bool operator==(const AgentBelief&) const = default;
};

/// Agents are independent; ordered by id for reproducible iteration.
struct JointBelief {
    std::map<AgentId, AgentBelief> agents;

    bool operator==(const JointBelief&) const = default;
};

/// Product of independent Gaussian densities on position (2-D), wrapped heading and speed.
double likelihood(const AgentObservation& obs, const PhysicalState& predicted, const ObservationNoise& noise);

/// Uniform intention prior over legal intentions; particles sampled around the observation.
AgentBelief init_agent_belief(const AgentObservation& obs, const RoadNetwork& network, const StyleBounds& bounds,
                              const ObservationNoise& noise, const InferenceConfig& cfg, std::uint64_t seed);
JointBelief init_belief(const Observation& obs, const RoadNetwork& network, const StyleBounds& bounds,
                        const ObservationNoise& noise, const InferenceConfig& cfg, std::uint64_t seed);

/// Histogram filter step b(m) <- eta p(o|m) b(m) with a likelihood floor and an
/// intention floor (renormalized). Probabilities are updated in place.
void update_intention_histogram(std::span<double> probabilities, std::span<const double> marginal_likelihoods,
                                double likelihood_floor, double intention_floor);

struct BeliefUpdate {
    JointBelief belief;
    /// p(o_t | m) per agent, aligned with that agent's hypotheses.
    std::map<AgentId, std::vector<double>> marginal_likelihoods;
};

/// One filtering step. `ego` is the ego state at the previous tick; exo-agents'
/// neighbors are taken at their previously observed states.
BeliefUpdate update_belief(const JointBelief& belief, const Observation& obs, const AgentState& ego,
                           const DrivingModel& model, const InferenceConfig& cfg, std::uint64_t seed);

/// Systematic resampling with style jitter and state roughening. Weights become uniform.
void resample_particles(std::vector<Particle>& particles, const RoadNetwork& network, const StyleBounds& bounds,
                        const InferenceConfig& cfg, std::uint64_t seed);

double effective_sample_size(std::span<const Particle> particles);

/// K determinized scenarios: per agent, m ~ b(m), then a particle ~ weights within m.
std::vector<Scenario> sample_scenarios(const JointBelief& belief, const AgentState& ego, int count,
                                       std::uint64_t seed);

/// The single most likely (m, theta, x) per agent.
Scenario max_likelihood_scenario(const JointBelief& belief, const AgentState& ego, std::uint64_t seed);

AgentState agent_from_particle(AgentId id, const Particle& particle);

}  // namespace botdrive
