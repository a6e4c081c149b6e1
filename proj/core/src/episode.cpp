#include "botdrive/episode.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "botdrive/random.hpp"

namespace botdrive {

namespace {

// Stream tags for the per-episode seed tree.
constexpr std::uint64_t kObservationStream = 0x6f6273;
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kFilterStream = 0x7066;
constexpr std::uint64_t kPlanStream = 0x706c616e;
constexpr std::uint64_t kRefineStream = 0x6973;

std::map<AgentId, AgentSummary> summarize_belief(const JointBelief& belief) {
    std::map<AgentId, AgentSummary> out;
    for (const auto& [id, agent] : belief.agents) {
        AgentSummary s;
        for (const IntentionHypothesis& h : agent.hypotheses) {
            s.intentions.emplace_back(h.kind, h.probability);
        }
        s.mean_style = agent.mean_style();
        out.emplace(id, std::move(s));
    }
    return out;
}

// Fallback when no candidate has a second point (never expected): one lane-follow tick.
AgentState lane_follow_step(const JointState& truth, const DrivingModel& model) {
    Scenario sc{truth, 0};
    SimOptions opts;
    opts.max_ticks = 1;
    opts.stop_on_collision = false;
    opts.emit_observation = false;
    return simulate(sc, make_macro_action(IntentionKind::lane_follow, model.pomdp), model, opts).final_state.ego;
}

}  // namespace

double compute_comfort(std::span<const double> accelerations, double dt, const ComfortLimits& limits) {
    if (accelerations.empty()) {
        return 1.0;
    }
    int ok = 0;
    for (std::size_t i = 0; i < accelerations.size(); ++i) {
        const double jerk = i == 0 ? 0.0 : (accelerations[i] - accelerations[i - 1]) / dt;
        if (std::abs(accelerations[i]) <= limits.max_accel && std::abs(jerk) <= limits.max_jerk) {
            ++ok;
        }
    }
    return static_cast<double>(ok) / static_cast<double>(accelerations.size());
}

EpisodeMetrics compute_metrics(const EpisodeResult& result) {
    EpisodeMetrics m;
    const double dt = result.config.pomdp.dt;
    const LaneId goal{result.spec.goal_lane};
    m.ticks = static_cast<int>(result.ticks.size());
    std::vector<double> accel;
    accel.reserve(result.ticks.size());
    for (const TickRecord& t : result.ticks) {
        m.reward += t.reward;
        m.collided = m.collided || t.collided;
        accel.push_back(t.truth.ego.state.acceleration);
    }
    m.comfort = compute_comfort(accel, dt);
    const PhysicalState& final_ego = result.ticks.empty() ? result.initial.ego.state : result.ticks.back().truth.ego.state;
    m.missed_goal = final_ego.lane != goal;

    auto on_goal = [&](const PhysicalState& s) {
        return s.lane == goal && std::abs(s.d) < result.config.driver.lc_complete_offset;
    };
    // Walk backwards to the start of the final on-goal run.
    std::optional<int> first;
    for (int i = static_cast<int>(result.ticks.size()); i >= 0; --i) {
        const PhysicalState& s = i == 0 ? result.initial.ego.state : result.ticks[static_cast<std::size_t>(i - 1)].truth.ego.state;
        if (!on_goal(s)) {
            break;
        }
        first = i;
    }
    if (first) {
        m.time_to_goal = *first * dt;
    }
    return m;
}

EpisodeResult run_episode(const ScenarioSpec& spec, const Config& base, Variant variant, std::uint64_t seed) {
    if (auto d = validate_spec(spec, base); !d.empty()) {
        throw SpecValidationError(std::move(d));
    }
    EpisodeResult result;
    result.variant = variant;
    result.seed = seed;
    result.spec = spec;
    result.config = apply_variant(base, variant);
    const Config& cfg = result.config;
    const DrivingModel model = build_model(spec, cfg);
    const double dt = cfg.pomdp.dt;
    const int total_ticks = static_cast<int>(std::lround(spec.duration / dt));
    const std::uint64_t obs_seed = mix_seed({seed, kObservationStream});
    const RewardWeights& w = cfg.pomdp.reward;

    JointState truth = initial_state(spec, model);
    result.initial = truth;
    Observation obs = extract_observation(truth, obs_seed, 0, model.pomdp.noise, dt);
    JointBelief belief = init_belief(obs, model.network, cfg.driver.style_bounds, model.pomdp.noise, cfg.inference,
                                     mix_seed({seed, kInitStream}));
    std::vector<PhysicalState> scratch;
    AgentState previous_ego = truth.ego;

    result.ticks.reserve(static_cast<std::size_t>(total_ticks));
    for (int t = 0; t < total_ticks; ++t) {
        const auto tick_seed = static_cast<std::uint64_t>(t);
        if (t > 0) {
            obs = extract_observation(truth, obs_seed, t, model.pomdp.noise, dt);
            belief = update_belief(belief, obs, previous_ego, model, cfg.inference,
                                   mix_seed({seed, kFilterStream, tick_seed}))
                         .belief;
        }
        PolicyTree tree = plan(belief, truth.ego, model, cfg.planner, mix_seed({seed, kPlanStream, tick_seed}));
        for (const MacroAction& a : tree.most_likely_sequence) {
            if (a.duration != (is_lane_change(a.kind) ? cfg.pomdp.lc_duration : cfg.pomdp.lf_duration)) {
                throw InvariantViolation("macro-action duration does not match its kind");
            }
        }
        if (tree.stats.max_depth > cfg.planner.horizon + 1e-9) {
            throw InvariantViolation("belief tree deeper than the planning horizon");
        }
        const Refinement refinement =
            cfg.planner.max_likelihood_only
                ? refine_on_scenarios(tree.scenarios, truth.ego, tree.most_likely_sequence, model, cfg.traj_opt)
                : refine_trajectory(belief, truth.ego, tree.most_likely_sequence, model, cfg.traj_opt,
                                    mix_seed({seed, kRefineStream, tick_seed}));
        const Candidate& chosen = refinement.selected;
        const AgentState next_ego =
            chosen.trajectory.size() > 1 ? chosen.trajectory[1] : lane_follow_step(truth, model);

        previous_ego = truth.ego;
        truth = step_joint(truth, model, scratch, &next_ego);
        const bool collided = ego_collides(truth, model);

        TickRecord rec;
        rec.tick = t + 1;
        rec.time = (t + 1) * dt;
        rec.observation = std::move(obs);
        rec.belief = summarize_belief(belief);
        rec.planner = tree.stats;
        rec.action = tree.root_action;
        rec.sequence = tree.most_likely_sequence;
        rec.speed_scale = chosen.speed_scale;
        rec.candidates = static_cast<int>(refinement.candidate_count);
        rec.reward = step_reward(truth.ego.state, collided, chosen.lane_change_initiated,
                                 goal_distance(model.network, truth.ego.state.lane, w), w, dt);
        rec.collided = collided;
        rec.truth = truth;
        result.ticks.push_back(std::move(rec));
        if (collided) {
            break;
        }
    }
    result.metrics = compute_metrics(result);
    return result;
}

std::vector<BatchRow> run_batch(const std::vector<BatchJob>& jobs, const Config& config) {
    std::vector<BatchRow> rows(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const EpisodeResult r = run_episode(jobs[i].spec, config, jobs[i].variant, jobs[i].seed);
                rows[i] = BatchRow{jobs[i].spec.name, jobs[i].variant, jobs[i].seed, r.metrics};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(config.harness.workers, static_cast<int>(jobs.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n; ++i) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return rows;
}

std::vector<VariantSummary> summarize(const std::vector<BatchRow>& rows) {
    std::vector<VariantSummary> out;
    for (const Variant v : kAllVariants) {
        VariantSummary s;
        s.variant = v;
        double ttg = 0.0;
        int ttg_count = 0;
        for (const BatchRow& r : rows) {
            if (r.variant != v) {
                continue;
            }
            ++s.episodes;
            s.mean_reward += r.metrics.reward;
            s.collision_rate += r.metrics.collided ? 1.0 : 0.0;
            s.miss_goal_rate += r.metrics.missed_goal ? 1.0 : 0.0;
            s.mean_comfort += r.metrics.comfort;
            if (r.metrics.time_to_goal) {
                ttg += *r.metrics.time_to_goal;
                ++ttg_count;
            }
        }
        if (s.episodes == 0) {
            continue;
        }
        const double n = s.episodes;
        s.mean_reward /= n;
        s.collision_rate *= 100.0 / n;
        s.miss_goal_rate *= 100.0 / n;
        s.mean_comfort /= n;
        if (ttg_count > 0) {
            s.mean_time_to_goal = ttg / ttg_count;
        }
        out.push_back(s);
    }
    return out;
}

std::string episodes_csv(const std::vector<BatchRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "scene,variant,seed,reward,collided,missed_goal,time_to_goal,comfort,ticks\n";
    for (const BatchRow& r : rows) {
        os << r.scene << ',' << to_string(r.variant) << ',' << r.seed << ',' << r.metrics.reward << ','
           << (r.metrics.collided ? 1 : 0) << ',' << (r.metrics.missed_goal ? 1 : 0) << ',';
        if (r.metrics.time_to_goal) {
            os << *r.metrics.time_to_goal;
        }
        os << ',' << r.metrics.comfort << ',' << r.metrics.ticks << '\n';
    }
    return os.str();
}

std::string summary_csv(const std::vector<VariantSummary>& summaries) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "variant,episodes,mean_reward,collision_rate_pct,miss_goal_rate_pct,mean_time_to_goal,mean_comfort\n";
    for (const VariantSummary& s : summaries) {
        os << to_string(s.variant) << ',' << s.episodes << ',' << s.mean_reward << ',' << s.collision_rate << ','
           << s.miss_goal_rate << ',';
        if (s.mean_time_to_goal) {
            os << *s.mean_time_to_goal;
        }
        os << ',' << s.mean_comfort << '\n';
    }
    return os.str();
}

}  // namespace botdrive
