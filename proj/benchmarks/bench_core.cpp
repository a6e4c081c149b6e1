#include <benchmark/benchmark.h>

#include "botdrive/config.hpp"
#include "botdrive/planner.hpp"
#include "botdrive/scene_generator.hpp"
#include "botdrive/traj_opt.hpp"

using namespace botdrive;

namespace {

struct Fixture {
    ScenarioSpec spec;
    Config config;
    DrivingModel model;
    JointState state;
    JointBelief belief;

    explicit Fixture(const char* name) : spec(generate_scene(name, {}, 3)), model(build_model(spec, config)) {
        state = initial_state(spec, model);
        const Observation obs = extract_observation(state, 1, 0, model.pomdp.noise, model.pomdp.dt);
        belief = init_belief(obs, model.network, model.driver.style_bounds, model.pomdp.noise, config.inference, 2);
    }
};

const Fixture& merge() {
    static const Fixture f("merge");
    return f;
}

void simulate_macro_action(benchmark::State& st) {
    const Fixture& f = merge();
    const MacroAction a = make_macro_action(st.range(0) == 0 ? IntentionKind::lane_follow
                                                                : IntentionKind::lane_change_left,
                                            f.model.pomdp);
    const Scenario sc{f.state, 9};
    for (auto _ : st) {
        benchmark::DoNotOptimize(simulate(sc, a, f.model));
    }
}
BENCHMARK(simulate_macro_action)->Arg(0)->Arg(1);

void update_belief_tick(benchmark::State& st) {
    const Fixture& f = merge();
    std::vector<PhysicalState> scratch;
    const JointState next = step_joint(f.state, f.model, scratch);
    const Observation obs = extract_observation(next, 1, 1, f.model.pomdp.noise, f.model.pomdp.dt);
    for (auto _ : st) {
        benchmark::DoNotOptimize(update_belief(f.belief, obs, f.state.ego, f.model, f.config.inference, 5));
    }
}
BENCHMARK(update_belief_tick)->Unit(benchmark::kMicrosecond);

void plan_default_budget(benchmark::State& st) {
    const Fixture& f = merge();
    PlannerConfig cfg = f.config.planner;
    cfg.num_scenarios = static_cast<int>(st.range(0));
    for (auto _ : st) {
        benchmark::DoNotOptimize(plan(f.belief, f.state.ego, f.model, cfg, 7));
    }
}
BENCHMARK(plan_default_budget)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void refine_first_action(benchmark::State& st) {
    const Fixture& f = merge();
    const MacroAction lf = make_macro_action(IntentionKind::lane_follow, f.model.pomdp);
    TrajOptConfig cfg = f.config.traj_opt;
    cfg.num_samples = static_cast<int>(st.range(0));
    const auto scenarios = sample_scenarios(f.belief, f.state.ego, 20, 4);
    for (auto _ : st) {
        const auto cands = generate_candidates(scenarios, {lf}, f.state.ego, f.model, cfg);
        const auto draws = resample(build_proposal(f.belief, cfg.mix), f.belief, f.state.ego, cfg.num_samples, 6);
        benchmark::DoNotOptimize(cross_evaluate(cands, draws, f.model));
    }
}
BENCHMARK(refine_first_action)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
