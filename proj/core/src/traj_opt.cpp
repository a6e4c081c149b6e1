#include "botdrive/traj_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "botdrive/random.hpp"

namespace botdrive {

namespace {

std::size_t pick_cumulative(double u, const std::vector<double>& probs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return i;
        }
    }
    // u beyond the rounded total: last entry with mass
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) {
            return i;
        }
    }
    return 0;
}

double max_pointwise_distance(const Candidate& a, const Candidate& b) {
    const std::size_t n = std::min(a.trajectory.size(), b.trajectory.size());
    double worst = a.trajectory.size() == b.trajectory.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, distance(a.trajectory[i].state.position, b.trajectory[i].state.position));
    }
    return worst;
}

}  // namespace

Proposal build_proposal(const JointBelief& belief, double mix) {
    if (!(mix >= 0.0 && mix <= 1.0)) {
        throw std::invalid_argument("proposal mix must lie in [0, 1]");
    }
    Proposal proposal;
    for (const auto& [id, agent] : belief.agents) {
        auto& entries = proposal.agents[id];
        const double uniform = agent.hypotheses.empty() ? 0.0 : 1.0 / static_cast<double>(agent.hypotheses.size());
        for (const IntentionHypothesis& h : agent.hypotheses) {
            entries.push_back({h.kind, h.probability, (1.0 - mix) * h.probability + mix * uniform});
        }
    }
    return proposal;
}

std::vector<WeightedScenario> resample(const Proposal& proposal, const JointBelief& belief, const AgentState& ego,
                                       int count, std::uint64_t seed) {
    std::vector<WeightedScenario> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    std::vector<double> q;
    std::vector<double> particle_weights;
    for (int k = 0; k < count; ++k) {
        SplitMix64 rng(mix_seed({seed, 0x1505, static_cast<std::uint64_t>(k)}));
        WeightedScenario ws;
        ws.scenario.joint.ego = ego;
        for (const auto& [id, agent] : belief.agents) {
            const auto& entries = proposal.agents.at(id);
            q.clear();
            for (const ProposalEntry& e : entries) {
                q.push_back(e.q);
            }
            const std::size_t m = pick_cumulative(rng.uniform(), q);
            const ProposalEntry& e = entries[m];
            // q == p entry-wise gives exactly 1
            ws.weight *= e.p == e.q ? 1.0 : e.p / e.q;
            ws.drawn.push_back(e.kind);
            const IntentionHypothesis& h = agent.hypotheses[m];
            particle_weights.clear();
            for (const Particle& p : h.particles) {
                particle_weights.push_back(p.weight);
            }
            const double u = rng.uniform();
            if (h.particles.empty()) {
                throw std::logic_error("intention hypothesis without particles");
            }
            ws.scenario.joint.exos.push_back(agent_from_particle(id, h.particles[pick_cumulative(u, particle_weights)]));
        }
        ws.scenario.noise_seed = rng();
        out.push_back(std::move(ws));
    }
    return out;
}

std::vector<Candidate> generate_candidates(const std::vector<Scenario>& scenarios,
                                           const std::vector<MacroAction>& planned_sequence, const AgentState& ego,
                                           const DrivingModel& model, const TrajOptConfig& cfg) {
    if (planned_sequence.empty()) {
        throw std::invalid_argument("planned sequence is empty");
    }
    const MacroAction& action = planned_sequence.front();
    std::vector<Candidate> out;
    SimOptions opts;
    opts.stop_on_collision = false;
    opts.record_segment = true;
    opts.emit_observation = false;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        for (const double scale : cfg.speed_scales) {
            Scenario sc = scenarios[i];
            sc.joint.ego = ego;
            sc.joint.ego.style = model.ego_style(scale);
            Candidate c;
            c.scenario = static_cast<int>(i);
            c.speed_scale = scale;
            c.action = action;
            AgentState probe = sc.joint.ego;
            c.lane_change_initiated = apply_macro_action(probe, action, model.network);
            const SimOutcome sim = simulate(sc, action, model, opts);
            c.trajectory.reserve(sim.segment.size() + 1);
            c.trajectory.push_back(probe);
            for (const JointState& js : sim.segment) {
                c.trajectory.push_back(js.ego);
            }
            const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Candidate& other) {
                return max_pointwise_distance(c, other) < cfg.dedup_distance;
            });
            if (!duplicate) {
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

double evaluate_candidate(const Candidate& candidate, const Scenario& scenario, const DrivingModel& model) {
    const RewardWeights& w = model.pomdp.reward;
    JointState state = scenario.joint;
    if (!candidate.trajectory.empty()) {
        state.ego = candidate.trajectory.front();
    }
    std::vector<PhysicalState> scratch;
    double discount = 1.0;
    double value = 0.0;
    for (std::size_t t = 1; t < candidate.trajectory.size(); ++t) {
        state = step_joint(state, model, scratch, &candidate.trajectory[t]);
        const bool collided = ego_collides(state, model);
        value += discount * step_reward(state.ego.state, collided, candidate.lane_change_initiated && t == 1,
                                        goal_distance(model.network, state.ego.state.lane, w), w, model.pomdp.dt);
        discount *= w.discount;
        if (collided) {
            break;
        }
    }
    return value;
}

CrossEvaluation cross_evaluate(const std::vector<Candidate>& candidates,
                               const std::vector<WeightedScenario>& scenarios, const DrivingModel& model) {
    if (candidates.empty() || scenarios.empty()) {
        throw std::invalid_argument("cross evaluation needs candidates and scenarios");
    }
    CrossEvaluation ev;
    for (const WeightedScenario& ws : scenarios) {
        if (!std::isfinite(ws.weight) || ws.weight <= 0.0) {
            throw std::logic_error("importance weight is not finite and positive");
        }
        ev.weights.push_back(ws.weight);
    }
    const double inv_n = 1.0 / static_cast<double>(scenarios.size());
    for (const Candidate& c : candidates) {
        std::vector<double> row;
        row.reserve(scenarios.size());
        double estimate = 0.0;
        for (const WeightedScenario& ws : scenarios) {
            row.push_back(evaluate_candidate(c, ws.scenario, model));
            estimate += ws.weight * row.back();
        }
        ev.values.push_back(std::move(row));
        ev.estimates.push_back(estimate * inv_n);
    }
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double best = ev.estimates[ev.selected];
        if (ev.estimates[c] > best ||
            (ev.estimates[c] == best && std::abs(candidates[c].speed_scale - 1.0) <
                                            std::abs(candidates[ev.selected].speed_scale - 1.0))) {
            ev.selected = c;
        }
    }
    return ev;
}

namespace {

Refinement refine_weighted(const std::vector<WeightedScenario>& weighted, const AgentState& ego,
                           const std::vector<MacroAction>& planned_sequence, const DrivingModel& model,
                           const TrajOptConfig& cfg) {
    std::vector<Scenario> scenarios;
    scenarios.reserve(weighted.size());
    for (const WeightedScenario& ws : weighted) {
        scenarios.push_back(ws.scenario);
    }
    Refinement r;
    std::vector<Candidate> candidates = generate_candidates(scenarios, planned_sequence, ego, model, cfg);
    r.candidate_count = candidates.size();
    r.evaluation = cross_evaluate(candidates, weighted, model);
    r.selected = std::move(candidates[r.evaluation.selected]);
    return r;
}

}  // namespace

Refinement refine_trajectory(const JointBelief& belief, const AgentState& ego,
                             const std::vector<MacroAction>& planned_sequence, const DrivingModel& model,
                             const TrajOptConfig& cfg, std::uint64_t seed) {
    const Proposal proposal = build_proposal(belief, cfg.mix);
    const auto weighted = resample(proposal, belief, ego, std::max(1, cfg.num_samples), seed);
    return refine_weighted(weighted, ego, planned_sequence, model, cfg);
}

Refinement refine_on_scenarios(const std::vector<Scenario>& scenarios, const AgentState& ego,
                               const std::vector<MacroAction>& planned_sequence, const DrivingModel& model,
                               const TrajOptConfig& cfg) {
    std::vector<WeightedScenario> weighted;
    for (const Scenario& sc : scenarios) {
        weighted.push_back({sc, 1.0, {}});
    }
    return refine_weighted(weighted, ego, planned_sequence, model, cfg);
}

}  // namespace botdrive
