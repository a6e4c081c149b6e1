#include "botdrive/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "botdrive/random.hpp"

namespace botdrive {

namespace {

double gaussian_pdf(double residual, double sigma) {
    const double z = residual / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double reflect_into(double value, double lo, double hi) {
    if (hi <= lo) {
        return lo;
    }
    const double span = hi - lo;
    double x = std::fmod(value - lo, 2.0 * span);
    if (x < 0.0) {
        x += 2.0 * span;
    }
    return lo + (x <= span ? x : 2.0 * span - x);
}

PhysicalState anchor_or_keep(const RoadNetwork& network, PhysicalState state, LaneId hint) {
    const auto p = network.try_project(state.position, hint);
    const LaneProjection anchor = p ? *p : network.project_onto(hint, state.position);
    state.lane = anchor.lane;
    state.s = anchor.s;
    state.d = anchor.d;
    return state;
}

PhysicalState observed_state(const AgentObservation& obs, const RoadNetwork& network, std::optional<LaneId> hint) {
    PhysicalState s;
    s.position = obs.position;
    s.heading = obs.heading;
    s.speed = std::max(0.0, obs.speed);
    const auto p = network.try_project(obs.position, hint);
    const LaneProjection anchor = p ? *p : network.project(obs.position);
    s.lane = anchor.lane;
    s.s = anchor.s;
    s.d = anchor.d;
    return s;
}

std::vector<Particle> sample_particles(const AgentObservation& obs, LaneId lane, const Intention& intention,
                                       const RoadNetwork& network, const StyleBounds& bounds,
                                       const ObservationNoise& noise, int count, SplitMix64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> v0(bounds.desired_speed_min, bounds.desired_speed_max);
    std::uniform_real_distribution<double> look(bounds.lookahead_min, bounds.lookahead_max);
    std::vector<Particle> particles;
    particles.reserve(static_cast<std::size_t>(count));
    const double w = 1.0 / count;
    for (int i = 0; i < count; ++i) {
        Particle p;
        p.state.position = obs.position + Vec2{noise.position * unit(rng), noise.position * unit(rng)};
        p.state.heading = wrap_angle(obs.heading + noise.heading * unit(rng));
        p.state.speed = std::max(0.0, obs.speed + noise.speed * unit(rng));
        p.state = anchor_or_keep(network, p.state, lane);
        p.intention = intention;
        p.style.desired_speed = v0(rng);
        p.style.lookahead = look(rng);
        p.weight = w;
        p.connector_seed = rng();
        particles.push_back(p);
    }
    return particles;
}

std::size_t pick_index(double u, std::span<const double> weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) {
            return i;
        }
    }
    // Round-off: fall back to the last entry with positive mass.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return 0;
}

std::size_t pick_hypothesis(double u, const AgentBelief& agent) {
    std::vector<double> probs;
    probs.reserve(agent.hypotheses.size());
    for (const auto& h : agent.hypotheses) {
        probs.push_back(h.probability);
    }
    return pick_index(u, probs);
}

std::size_t pick_particle(double u, const IntentionHypothesis& h) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.particles.size(); ++i) {
        acc += h.particles[i].weight;
        if (u < acc) {
            return i;
        }
    }
    return h.particles.size() - 1;
}

// Replaces the states of an evenly spaced subset of freshly resampled
// (equal-weight) particles with draws around the current observation; styles
// are kept. This is the only way a lane-change hypothesis can pick up a
// commitment its particles missed.
void regenerate_particles(IntentionHypothesis& h, const AgentObservation& obs, LaneId hint,
                          const RoadNetwork& network, const StyleBounds& bounds, const ObservationNoise& noise,
                          const InferenceConfig& cfg, std::uint64_t seed) {
    const std::size_t n = h.particles.size();
    const auto fresh_count = static_cast<std::size_t>(std::lround(cfg.regeneration_fraction * static_cast<double>(n)));
    if (fresh_count == 0 || n == 0) {
        return;
    }
    SplitMix64 rng(seed);
    const PhysicalState obs_state = observed_state(obs, network, hint);
    const auto intention = h.target_lane ? Intention{h.kind, h.target_lane, false} : Intention{};
    std::vector<Particle> fresh = sample_particles(obs, obs_state.lane, intention, network, bounds, noise,
                                                   static_cast<int>(fresh_count), rng);
    const double w = h.particles.front().weight;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        Particle& slot = h.particles[i * n / fresh.size()];
        // new state, posterior style
        fresh[i].style = slot.style;
        fresh[i].weight = w;
        fresh[i].intention.committed = h.target_lane.has_value() && i % 2 == 0;
        slot = fresh[i];
    }
}

}  // namespace

double AgentBelief::probability(IntentionKind kind) const {
    const auto* h = find(kind);
    return h ? h->probability : 0.0;
}

const IntentionHypothesis* AgentBelief::find(IntentionKind kind) const {
    for (const auto& h : hypotheses) {
        if (h.kind == kind) {
            return &h;
        }
    }
    return nullptr;
}

StyleParam AgentBelief::mean_style() const {
    StyleParam mean{0.0, 0.0};
    for (const auto& h : hypotheses) {
        for (const auto& p : h.particles) {
            mean.desired_speed += h.probability * p.weight * p.style.desired_speed;
            mean.lookahead += h.probability * p.weight * p.style.lookahead;
        }
    }
    return mean;
}

double likelihood(const AgentObservation& obs, const PhysicalState& predicted, const ObservationNoise& noise) {
    return gaussian_pdf(obs.position.x - predicted.position.x, noise.position) *
           gaussian_pdf(obs.position.y - predicted.position.y, noise.position) *
           gaussian_pdf(wrap_angle(obs.heading - predicted.heading), noise.heading) *
           gaussian_pdf(obs.speed - predicted.speed, noise.speed);
}

AgentBelief init_agent_belief(const AgentObservation& obs, const RoadNetwork& network, const StyleBounds& bounds,
                              const ObservationNoise& noise, const InferenceConfig& cfg, std::uint64_t seed) {
    AgentBelief belief;
    belief.last_observed = observed_state(obs, network, std::nullopt);
    const LaneId lane = belief.last_observed.lane;
    for (const IntentionKind kind : kAllIntentionKinds) {
        const auto intention = make_intention(kind, lane, network);
        if (!intention) {
            continue;
        }
        IntentionHypothesis h;
        h.kind = kind;
        h.target_lane = intention->target_lane;
        SplitMix64 rng(mix_seed({seed, static_cast<std::uint64_t>(obs.id), static_cast<std::uint64_t>(kind)}));
        h.particles = sample_particles(obs, lane, *intention, network, bounds, noise, cfg.particles_per_intention, rng);
        belief.hypotheses.push_back(std::move(h));
    }
    const double uniform = 1.0 / static_cast<double>(belief.hypotheses.size());
    for (auto& h : belief.hypotheses) {
        h.probability = uniform;
    }
    return belief;
}

JointBelief init_belief(const Observation& obs, const RoadNetwork& network, const StyleBounds& bounds,
                        const ObservationNoise& noise, const InferenceConfig& cfg, std::uint64_t seed) {
    JointBelief belief;
    for (const auto& agent : obs.agents) {
        belief.agents.emplace(agent.id, init_agent_belief(agent, network, bounds, noise, cfg, seed));
    }
    return belief;
}

void update_intention_histogram(std::span<double> probabilities, std::span<const double> marginal_likelihoods,
                                double likelihood_floor, double intention_floor) {
    double total = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        probabilities[i] *= std::max(marginal_likelihoods[i], likelihood_floor);
        total += probabilities[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::fill(probabilities.begin(), probabilities.end(), 1.0 / static_cast<double>(probabilities.size()));
        return;
    }
    for (double& p : probabilities) {
        p /= total;
    }
    if (intention_floor <= 0.0) {
        return;
    }
    bool floored = false;
    for (double& p : probabilities) {
        if (p < intention_floor) {
            p = intention_floor;
            floored = true;
        }
    }
    if (floored) {
        const double sum = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
        for (double& p : probabilities) {
            p /= sum;
        }
    }
}

double effective_sample_size(std::span<const Particle> particles) {
    double sq = 0.0;
    for (const auto& p : particles) {
        sq += p.weight * p.weight;
    }
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

void resample_particles(std::vector<Particle>& particles, const RoadNetwork& network, const StyleBounds& bounds,
                        const InferenceConfig& cfg, std::uint64_t seed) {
    const std::size_t n = particles.size();
    if (n == 0) {
        return;
    }
    SplitMix64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double step = 1.0 / static_cast<double>(n);
    double u = rng.uniform() * step;
    double acc = particles[0].weight;
    std::size_t j = 0;
    std::vector<Particle> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        while (u > acc && j + 1 < n) {
            ++j;
            acc += particles[j].weight;
        }
        out.push_back(particles[j]);
        u += step;
    }
    const double v0_sigma = cfg.style_jitter_fraction * (bounds.desired_speed_max - bounds.desired_speed_min);
    const double look_sigma = cfg.style_jitter_fraction * (bounds.lookahead_max - bounds.lookahead_min);
    for (auto& p : out) {
        p.weight = step;
        p.style.desired_speed =
            reflect_into(p.style.desired_speed + v0_sigma * unit(rng), bounds.desired_speed_min,
                         bounds.desired_speed_max);
        p.style.lookahead =
            reflect_into(p.style.lookahead + look_sigma * unit(rng), bounds.lookahead_min, bounds.lookahead_max);
        if (cfg.position_jitter > 0.0 || cfg.heading_jitter > 0.0 || cfg.speed_jitter > 0.0) {
            p.state.position =
                p.state.position + Vec2{cfg.position_jitter * unit(rng), cfg.position_jitter * unit(rng)};
            p.state.heading = wrap_angle(p.state.heading + cfg.heading_jitter * unit(rng));
            p.state.speed = std::max(0.0, p.state.speed + cfg.speed_jitter * unit(rng));
            p.state = anchor_or_keep(network, p.state, p.state.lane);
        }
    }
    particles = std::move(out);
}

BeliefUpdate update_belief(const JointBelief& belief, const Observation& obs, const AgentState& ego,
                           const DrivingModel& model, const InferenceConfig& cfg, std::uint64_t seed) {
    BeliefUpdate result;
    const RoadNetwork& network = model.network;
    const StyleBounds& bounds = model.driver.style_bounds;
    const ObservationNoise& noise = model.pomdp.noise;

    // Neighbor poses at t-1: the ego, every previously observed exo-agent, parked vehicles.
    std::vector<PhysicalState> traffic{ego.state};
    std::vector<AgentId> traffic_ids{kEgoId};
    for (const auto& [id, agent] : belief.agents) {
        traffic.push_back(agent.last_observed);
        traffic_ids.push_back(id);
    }
    traffic.insert(traffic.end(), model.obstacles.begin(), model.obstacles.end());

    for (const auto& agent_obs : obs.agents) {
        const auto found = belief.agents.find(agent_obs.id);
        if (found == belief.agents.end()) {
            result.belief.agents.emplace(agent_obs.id,
                                         init_agent_belief(agent_obs, network, bounds, noise, cfg, seed));
            continue;
        }
        const AgentBelief& prior = found->second;
        const std::size_t self =
            static_cast<std::size_t>(std::find(traffic_ids.begin(), traffic_ids.end(), agent_obs.id) -
                                     traffic_ids.begin());
        AgentBelief posterior = prior;
        std::vector<double> marginals;
        marginals.reserve(prior.hypotheses.size());

        for (std::size_t hi = 0; hi < posterior.hypotheses.size(); ++hi) {
            IntentionHypothesis& h = posterior.hypotheses[hi];
            double marginal = 0.0;
            for (Particle& p : h.particles) {
                const DriverStep step = step_driver(p.state, p.intention, p.style, Traffic{traffic, self}, network,
                                                    model.driver, model.pomdp.dt,
                                                    ConnectorChoice{ConnectorPolicy::seeded, p.connector_seed});
                p.state = step.state;
                p.intention = step.intention;
                const double lik = likelihood(agent_obs, p.state, noise);
                p.weight *= lik;
                marginal += p.weight;
            }
            const std::uint64_t h_seed = mix_seed({seed, static_cast<std::uint64_t>(agent_obs.id), hi});
            if (!(marginal > 0.0) || !std::isfinite(marginal)) {
                // Every particle lost the agent: restart this hypothesis at the observation.
                const auto intention = h.target_lane ? Intention{h.kind, h.target_lane, false} : Intention{};
                SplitMix64 rng(h_seed);
                const PhysicalState obs_state = observed_state(agent_obs, network, prior.last_observed.lane);
                h.particles = sample_particles(agent_obs, obs_state.lane, intention, network, bounds, noise,
                                               cfg.particles_per_intention, rng);
                marginals.push_back(cfg.likelihood_floor);
                continue;
            }
            for (Particle& p : h.particles) {
                p.weight /= marginal;
            }
            marginals.push_back(std::max(marginal, cfg.likelihood_floor));
            if (effective_sample_size(h.particles) < cfg.resample_ess_fraction * static_cast<double>(h.particles.size())) {
                resample_particles(h.particles, network, bounds, cfg, mix_seed({h_seed, 0x5e5a}));
                regenerate_particles(h, agent_obs, prior.last_observed.lane, network, bounds, noise, cfg,
                                     mix_seed({h_seed, 0x7e9e}));
            }
        }

        std::vector<double> probs;
        probs.reserve(posterior.hypotheses.size());
        for (const auto& h : posterior.hypotheses) {
            probs.push_back(h.probability);
        }
        update_intention_histogram(probs, marginals, cfg.likelihood_floor, cfg.intention_floor);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            posterior.hypotheses[i].probability = probs[i];
        }
        posterior.last_observed = observed_state(agent_obs, network, prior.last_observed.lane);
        result.marginal_likelihoods.emplace(agent_obs.id, std::move(marginals));
        result.belief.agents.emplace(agent_obs.id, std::move(posterior));
    }
    return result;
}

AgentState agent_from_particle(AgentId id, const Particle& particle) {
    AgentState a;
    a.id = id;
    a.state = particle.state;
    a.intention = particle.intention;
    a.style = particle.style;
    a.connector_seed = particle.connector_seed;
    return a;
}

std::vector<Scenario> sample_scenarios(const JointBelief& belief, const AgentState& ego, int count,
                                       std::uint64_t seed) {
    std::vector<Scenario> scenarios;
    scenarios.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int k = 0; k < count; ++k) {
        SplitMix64 rng(mix_seed({seed, static_cast<std::uint64_t>(k)}));
        Scenario sc;
        sc.joint.ego = ego;
        for (const auto& [id, agent] : belief.agents) {
            const auto& h = agent.hypotheses[pick_hypothesis(rng.uniform(), agent)];
            sc.joint.exos.push_back(agent_from_particle(id, h.particles[pick_particle(rng.uniform(), h)]));
        }
        sc.noise_seed = rng();
        scenarios.push_back(std::move(sc));
    }
    return scenarios;
}

Scenario max_likelihood_scenario(const JointBelief& belief, const AgentState& ego, std::uint64_t seed) {
    Scenario sc;
    sc.joint.ego = ego;
    for (const auto& [id, agent] : belief.agents) {
        const auto best_h = std::max_element(agent.hypotheses.begin(), agent.hypotheses.end(),
                                             [](const auto& a, const auto& b) { return a.probability < b.probability; });
        const auto best_p = std::max_element(best_h->particles.begin(), best_h->particles.end(),
                                             [](const auto& a, const auto& b) { return a.weight < b.weight; });
        sc.joint.exos.push_back(agent_from_particle(id, *best_p));
    }
    sc.noise_seed = SplitMix64(mix_seed({seed, 0x3141})).operator()();
    return sc;
}

}  // namespace botdrive
