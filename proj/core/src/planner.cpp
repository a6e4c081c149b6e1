#include "botdrive/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace botdrive {

namespace {

constexpr double kHorizonSlack = 1e-9;

std::int64_t bucket(double value, double width) { return static_cast<std::int64_t>(std::floor(value / width)); }

int remaining_ticks(double depth, double horizon, double dt) {
    return std::max(0, static_cast<int>(std::lround((horizon - depth) / dt)));
}

}  // namespace

const ActionNode* BeliefNode::child(IntentionKind kind) const {
    for (const ActionNode& a : children) {
        if (a.action.kind == kind) {
            return &a;
        }
    }
    return nullptr;
}

ObservationKey make_observation_key(const JointState& final_state, const Observation& final_obs,
                                    const RoadNetwork& network, const PlannerConfig& cfg) {
    ObservationKey key;
    const PhysicalState& ego = final_state.ego.state;
    key.cells.reserve(5 + 4 * final_obs.agents.size());
    key.cells.push_back(ego.lane.value);
    key.cells.push_back(bucket(ego.s, cfg.s_bucket));
    key.cells.push_back(bucket(ego.speed, cfg.speed_bucket));
    key.cells.push_back(static_cast<std::int64_t>(final_state.ego.intention.kind));
    key.cells.push_back(final_state.ego.intention.committed ? 1 : 0);
    for (const AgentObservation& o : final_obs.agents) {
        std::optional<LaneId> hint;
        for (const AgentState& exo : final_state.exos) {
            if (exo.id == o.id) {
                hint = exo.state.lane;
            }
        }
        const auto p = network.try_project(o.position, hint);
        key.cells.push_back(o.id);
        key.cells.push_back(p ? p->lane.value : -1);
        key.cells.push_back(p ? bucket(p->s, cfg.s_bucket) : 0);
        key.cells.push_back(bucket(o.speed, cfg.speed_bucket));
    }
    return key;
}

double default_policy_value(const Scenario& scenario, double depth, double horizon, const DrivingModel& model,
                            int start_tick, double start_discount) {
    const double dt = model.pomdp.dt;
    const MacroAction lf = make_macro_action(IntentionKind::lane_follow, model.pomdp);
    int remaining = remaining_ticks(depth, horizon, dt);
    Scenario current = scenario;
    SimOptions opts;
    opts.start_tick = start_tick;
    opts.start_discount = start_discount;
    opts.emit_observation = false;
    double value = 0.0;
    while (remaining > 0) {
        opts.max_ticks = std::min(lf.ticks(dt), remaining);
        SimOutcome out = simulate(current, lf, model, opts);
        value += out.reward;
        if (out.terminal) {
            break;
        }
        remaining -= out.ticks;
        opts.start_tick += out.ticks;
        opts.start_discount = out.next_discount;
        current.joint = std::move(out.final_state);
    }
    return value;
}

double upper_bound_value(const AgentState& ego, double depth, double horizon, const DrivingModel& model,
                         double start_discount) {
    const RoadNetwork& network = model.network;
    const RewardWeights& w = model.pomdp.reward;
    const double dt = model.pomdp.dt;
    double hops = goal_distance(network, ego.state.lane, w);
    if (lane_change_in_progress(ego.intention) && ego.intention.target_lane) {
        hops = std::min(hops, goal_distance(network, *ego.intention.target_lane, w));
    }
    const bool first_change_free = is_lane_change(ego.intention.kind);
    const int ticks = remaining_ticks(depth, horizon, dt);
    const int lc_ticks = make_macro_action(IntentionKind::lane_change_left, model.pomdp).ticks(dt);
    const int fit = lc_ticks > 0 ? ticks / lc_ticks : 0;
    const int max_changes = std::min(fit, static_cast<int>(std::ceil(hops)));

    double best = -std::numeric_limits<double>::infinity();
    for (int n = 0; n <= max_changes; ++n) {
        double value = 0.0;
        double discount = start_discount;
        for (int j = 0; j < ticks; ++j) {
            const int started = std::min(n, j / lc_ticks + 1);
            const double remaining_hops = std::max(0.0, hops - started);
            double r = -w.goal * (std::exp(w.goal_exponent * remaining_hops) - 1.0) * dt;
            if (j % lc_ticks == 0 && j / lc_ticks < n && !(j == 0 && first_change_free)) {
                r -= w.lane_change;
            }
            value += discount * r;
            discount *= w.discount;
        }
        best = std::max(best, value);
    }
    return best;
}

namespace {

class TreeSearch {
public:
    TreeSearch(std::vector<Scenario> scenarios, const DrivingModel& model, const PlannerConfig& cfg)
        : scenarios_(std::move(scenarios)), model_(model), cfg_(cfg),
          inv_count_(1.0 / static_cast<double>(std::max<std::size_t>(1, scenarios_.size()))) {}

    PolicyTree run() {
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed_ms = [&] {
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        };
        auto root = std::make_unique<BeliefNode>();
        for (std::size_t i = 0; i < scenarios_.size(); ++i) {
            root->scenario_ids.push_back(static_cast<int>(i));
            root->states.push_back(scenarios_[i].joint);
        }
        init_bounds(*root);

        PolicyTree tree;
        int expansions = 0;
        while (root->upper - root->lower > cfg_.convergence_gap) {
            if (expansions >= cfg_.budget.max_expansions) {
                break;
            }
            if (cfg_.budget.max_ms > 0.0 && elapsed_ms() >= cfg_.budget.max_ms) {
                break;
            }
            std::vector<BeliefNode*> path;
            if (!descend(*root, path)) {
                break;
            }
            expand(*path.back());
            ++expansions;
            for (auto it = path.rbegin(); it != path.rend(); ++it) {
                backup(**it);
            }
        }

        tree.stats.expansions = expansions;
        tree.stats.expanded_root = root->expanded;
        tree.stats.root_lower = root->lower;
        tree.stats.root_upper = root->upper;
        for_each_node(*root, [&](const BeliefNode& n) {
            ++tree.stats.nodes;
            tree.stats.max_depth = std::max(tree.stats.max_depth, n.depth);
        });
        tree.root_action = root->expanded ? best_action(*root) : make_macro_action(IntentionKind::lane_follow,
                                                                                   model_.pomdp);
        tree.root = std::move(root);
        tree.scenarios = std::move(scenarios_);
        tree.most_likely_sequence = extract_sequence(tree);
        tree.stats.elapsed_ms = elapsed_ms();
        return tree;
    }

private:
    std::vector<MacroAction> fitting_actions(const BeliefNode& node) const {
        std::vector<MacroAction> out;
        if (node.states.empty()) {
            return out;
        }
        for (const MacroAction& a : legal_actions(node.states.front().ego, model_.network, model_.pomdp)) {
            if (node.depth + a.duration <= cfg_.horizon + kHorizonSlack) {
                out.push_back(a);
            }
        }
        return out;
    }

    void init_bounds(BeliefNode& node) {
        double lower = 0.0;
        if (!node.terminal) {
            for (std::size_t i = 0; i < node.scenario_ids.size(); ++i) {
                const Scenario sc{node.states[i], scenarios_[static_cast<std::size_t>(node.scenario_ids[i])].noise_seed};
                lower += default_policy_value(sc, node.depth, cfg_.horizon, model_, node.tick, node.discount);
            }
        }
        node.default_lower = lower * inv_count_;
        node.lower = node.default_lower;
        node.regularized = node.default_lower;
        if (node.terminal || fitting_actions(node).empty()) {
            node.terminal = true;
            node.upper = node.lower;
            return;
        }
        const double ub = upper_bound_value(node.states.front().ego, node.depth, cfg_.horizon, model_, node.discount);
        node.upper = std::max(ub * static_cast<double>(node.scenario_ids.size()) * inv_count_, node.lower);
    }

    bool descend(BeliefNode& root, std::vector<BeliefNode*>& path) const {
        const double root_gap = root.upper - root.lower;
        BeliefNode* node = &root;
        path.push_back(node);
        while (node->expanded) {
            ActionNode* best = nullptr;
            for (ActionNode& a : node->children) {
                if (best == nullptr || a.upper > best->upper) {
                    best = &a;
                }
            }
            if (best == nullptr) {
                return false;
            }
            BeliefNode* next = nullptr;
            double next_weu = 0.0;
            for (auto& [key, child] : best->children) {
                const double weight = static_cast<double>(child->scenario_ids.size()) * inv_count_;
                const double weu = (child->upper - child->lower) - cfg_.xi * weight * root_gap;
                if (next == nullptr || weu > next_weu) {
                    next = child.get();
                    next_weu = weu;
                }
            }
            if (next == nullptr || next_weu <= 0.0) {
                return false;
            }
            node = next;
            path.push_back(node);
        }
        return !node->terminal;
    }

    void expand(BeliefNode& node) {
        const double dt = model_.pomdp.dt;
        for (const MacroAction& action : fitting_actions(node)) {
            ActionNode an;
            an.action = action;
            struct Group {
                std::vector<int> ids;
                std::vector<JointState> states;
                double discount = 1.0;
            };
            std::map<ObservationKey, Group> groups;
            SimOptions opts;
            opts.start_tick = node.tick;
            opts.start_discount = node.discount;
            double total = 0.0;
            for (std::size_t i = 0; i < node.scenario_ids.size(); ++i) {
                const int id = node.scenario_ids[i];
                const Scenario sc{node.states[i], scenarios_[static_cast<std::size_t>(id)].noise_seed};
                SimOutcome out = simulate(sc, action, model_, opts);
                an.scenario_rewards.push_back(out.reward);
                total += out.reward;
                ObservationKey key;
                if (out.terminal) {
                    key.terminal = true;
                } else {
                    key = make_observation_key(out.final_state, out.final_obs, model_.network, cfg_);
                }
                Group& g = groups[key];
                g.ids.push_back(id);
                g.states.push_back(std::move(out.final_state));
                g.discount = out.next_discount;
            }
            an.reward = total * inv_count_;
            for (auto& [key, g] : groups) {
                auto child = std::make_unique<BeliefNode>();
                child->scenario_ids = std::move(g.ids);
                child->states = std::move(g.states);
                child->depth = node.depth + action.duration;
                child->tick = node.tick + action.ticks(dt);
                child->discount = g.discount;
                child->terminal = key.terminal;
                init_bounds(*child);
                an.children.emplace(key, std::move(child));
            }
            node.children.push_back(std::move(an));
        }
        node.expanded = true;
        if (node.children.empty()) {
            node.terminal = true;
        }
    }

    void backup(BeliefNode& node) const {
        if (!node.expanded || node.children.empty()) {
            return;
        }
        const double weight = static_cast<double>(node.scenario_ids.size()) * inv_count_;
        double lower = node.default_lower;
        double upper = -std::numeric_limits<double>::infinity();
        double regularized = node.default_lower;
        for (ActionNode& a : node.children) {
            a.lower = a.reward;
            a.upper = a.reward;
            a.regularized = a.reward - cfg_.regularization * weight;
            for (const auto& [key, child] : a.children) {
                a.lower += child->lower;
                a.upper += child->upper;
                a.regularized += child->regularized;
            }
            lower = std::max(lower, a.lower);
            upper = std::max(upper, a.upper);
            regularized = std::max(regularized, a.regularized);
        }
        node.lower = lower;
        node.upper = std::max(upper, lower);
        node.regularized = regularized;
    }

public:
    static MacroAction best_action(const BeliefNode& node) {
        const ActionNode* best = nullptr;
        for (const ActionNode& a : node.children) {
            if (best == nullptr || a.regularized > best->regularized) {
                best = &a;
            }
        }
        return best->action;
    }

private:
    std::vector<Scenario> scenarios_;
    const DrivingModel& model_;
    const PlannerConfig& cfg_;
    double inv_count_;
};

}  // namespace

std::vector<MacroAction> extract_sequence(const PolicyTree& tree) {
    std::vector<MacroAction> seq{tree.root_action};
    const BeliefNode* node = tree.root.get();
    MacroAction action = tree.root_action;
    while (node != nullptr && node->expanded) {
        const ActionNode* an = node->child(action.kind);
        if (an == nullptr || an->children.empty()) {
            break;
        }
        const BeliefNode* likely = nullptr;
        for (const auto& [key, child] : an->children) {
            if (likely == nullptr || child->scenario_ids.size() > likely->scenario_ids.size()) {
                likely = child.get();
            }
        }
        node = likely;
        if (!node->expanded || node->terminal || node->children.empty()) {
            break;
        }
        action = TreeSearch::best_action(*node);
        seq.push_back(action);
    }
    return seq;
}

PolicyTree plan_scenarios(std::vector<Scenario> scenarios, const DrivingModel& model, const PlannerConfig& cfg) {
    TreeSearch search(std::move(scenarios), model, cfg);
    return search.run();
}

PolicyTree plan(const JointBelief& belief, const AgentState& ego, const DrivingModel& model,
                const PlannerConfig& cfg, std::uint64_t seed) {
    std::vector<Scenario> scenarios;
    if (cfg.max_likelihood_only) {
        scenarios.push_back(max_likelihood_scenario(belief, ego, seed));
    } else {
        scenarios = sample_scenarios(belief, ego, std::max(1, cfg.num_scenarios), seed);
    }
    return plan_scenarios(std::move(scenarios), model, cfg);
}

}  // namespace botdrive
