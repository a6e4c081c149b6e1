#include "botdrive/scene_generator.hpp"

#include <algorithm>
#include <cmath>

#include "botdrive/random.hpp"

namespace botdrive {

namespace {

LaneSpec straight_lane(int id, Vec2 from, Vec2 to, double width = 3.5) {
    LaneSpec l;
    l.id = id;
    l.centerline = {from, to};
    l.width = width;
    return l;
}

// Quarter-ish arc from `start` heading along +x, turning right by `angle` with `radius`.
std::vector<Vec2> right_arc(Vec2 start, double radius, double angle, int segments) {
    std::vector<Vec2> pts;
    const Vec2 center{start.x, start.y - radius};
    for (int i = 0; i <= segments; ++i) {
        const double a = angle * static_cast<double>(i) / segments;
        pts.push_back({center.x + radius * std::sin(a), center.y + radius * std::cos(a)});
    }
    return pts;
}

struct Jitter {
    SplitMix64 rng;
    double scale;

    double operator()(double half_width) { return scale * half_width * (2.0 * rng.uniform() - 1.0); }
    double between(double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }
};

ExoSpec exo(int id, int lane, double s, double speed, IntentionKind kind, double v0, double lookahead) {
    ExoSpec e;
    e.id = id;
    e.start = Placement{lane, s, 0.0, speed};
    e.intention = kind;
    e.style = StyleParam{v0, lookahead};
    return e;
}

// Lanes: 1 = B (left, goal), 2 = A (ego), 3 = C (right, dead-end merge connector).
ScenarioSpec merge_scene(const SceneParams& params, std::uint64_t seed) {
    Jitter j{SplitMix64(mix_seed({seed, 0x6d65})), params.jitter};
    ScenarioSpec spec;
    spec.name = "merge";
    spec.seed = seed;
    spec.duration = params.duration;
    constexpr double road = 600.0;
    constexpr double merge_end = 70.0;
    LaneSpec b = straight_lane(1, {0.0, 3.5}, {road, 3.5});
    b.right = 2;
    LaneSpec a = straight_lane(2, {0.0, 0.0}, {road, 0.0});
    a.left = 1;
    a.right = 3;
    LaneSpec c = straight_lane(3, {0.0, -3.5}, {merge_end, -3.5});
    c.left = 2;
    c.is_connector = true;
    spec.lanes = {b, a, c};
    spec.goal_lane = 1;
    // Parked vehicles close off the end of the merging lane.
    spec.obstacles = {Placement{3, merge_end - 3.0, 0.0, 0.0}, Placement{3, merge_end - 10.0, 0.0, 0.0}};
    spec.ego = Placement{2, 10.0, 0.0, 6.0};

    const int count = params.exo_count < 0 ? 4 : params.exo_count;
    const IntentionKind intruder_kind =
        j.rng.uniform() < 0.9 ? IntentionKind::lane_change_left : IntentionKind::lane_follow;
    // The intruder runs alongside and ahead of the ego, behind a slow leader
    // in the ego lane; the goal lane carries a faster pair the ego has to let by.
    std::vector<ExoSpec> pool = {
        exo(1, 3, 14.0 + j(3.0), 5.0, intruder_kind, 8.0, 4.0),
        exo(2, 2, 32.0 + j(2.0), 5.0, IntentionKind::lane_follow, 5.5, 8.0),
        exo(3, 1, 2.0 + j(2.0), 8.0, IntentionKind::lane_follow, 10.0, 8.0),
        exo(4, 1, 24.0 + j(2.0), 8.0, IntentionKind::lane_follow, 10.0, 8.0),
        exo(5, 1, 120.0 + j(4.0), 10.0, IntentionKind::lane_follow, 11.0, 8.0),
        exo(6, 2, 150.0 + j(4.0), 9.0, IntentionKind::lane_follow, 10.0, 8.0),
    };
    for (int i = 0; i < count; ++i) {
        ExoSpec e = pool[static_cast<std::size_t>(i) % pool.size()];
        if (i >= static_cast<int>(pool.size())) {
            e.id = i + 1;
            e.start.lane = (i % 2 == 0) ? 1 : 2;
            e.start.s = 120.0 + 20.0 * i + j(3.0);
            e.intention = IntentionKind::lane_follow;
        }
        spec.exos.push_back(e);
    }
    return spec;
}

// Two-lane approach into a junction: straight through (lanes 3/4 -> 5/6) or a right turn (7 -> 8).
ScenarioSpec junction_scene(const SceneParams& params, std::uint64_t seed) {
    Jitter j{SplitMix64(mix_seed({seed, 0x6a75})), params.jitter};
    ScenarioSpec spec;
    spec.name = "junction";
    spec.seed = seed;
    spec.duration = params.duration;
    constexpr double approach = 150.0;
    constexpr double box = 30.0;
    LaneSpec l1 = straight_lane(1, {0.0, 1.75}, {approach, 1.75});
    LaneSpec l2 = straight_lane(2, {0.0, -1.75}, {approach, -1.75});
    l1.right = 2;
    l2.left = 1;
    l1.successors = {3};
    l2.successors = {4, 7};
    LaneSpec l3 = straight_lane(3, {approach, 1.75}, {approach + box, 1.75});
    LaneSpec l4 = straight_lane(4, {approach, -1.75}, {approach + box, -1.75});
    l3.is_connector = l4.is_connector = true;
    l3.right = 4;
    l4.left = 3;
    l3.successors = {5};
    l4.successors = {6};
    LaneSpec l5 = straight_lane(5, {approach + box, 1.75}, {approach + box + 250.0, 1.75});
    LaneSpec l6 = straight_lane(6, {approach + box, -1.75}, {approach + box + 250.0, -1.75});
    l5.right = 6;
    l6.left = 5;
    LaneSpec l7;
    l7.id = 7;
    l7.centerline = right_arc({approach, -1.75}, 15.0, M_PI / 2.0, 12);
    l7.is_connector = true;
    const Vec2 turn_end = l7.centerline.back();
    l7.successors = {8};
    LaneSpec l8 = straight_lane(8, turn_end, {turn_end.x, turn_end.y - 250.0});
    spec.lanes = {l1, l2, l3, l4, l5, l6, l7, l8};
    const bool turn = j.rng.uniform() < 0.5;
    spec.goal_lane = turn ? 8 : 5;
    spec.ego = Placement{turn ? 1 : 2, 10.0 + j(5.0), 0.0, 8.0 + j(1.0)};

    const int count = params.exo_count < 0 ? 3 : params.exo_count;
    std::vector<double> used[2];
    used[spec.ego.lane - 1].push_back(spec.ego.s);
    for (int i = 0; i < count; ++i) {
        const int lane = j.rng.uniform() < 0.5 ? 1 : 2;
        double s = 0.0;
        for (int attempt = 0;; ++attempt) {
            s = j.between(0.0, approach - 20.0);
            const auto& taken = used[lane - 1];
            const bool clear = std::all_of(taken.begin(), taken.end(), [&](double t) { return std::abs(t - s) > 12.0; });
            if (clear || attempt > 50) {
                break;
            }
        }
        used[lane - 1].push_back(s);
        const double u = j.rng.uniform();
        IntentionKind kind = IntentionKind::lane_follow;
        if (u < 0.25) {
            kind = lane == 1 ? IntentionKind::lane_change_right : IntentionKind::lane_change_left;
        }
        spec.exos.push_back(exo(i + 1, lane, s, j.between(5.0, 10.0), kind, j.between(7.0, 12.0), j.between(5.0, 12.0)));
    }
    return spec;
}

ScenarioSpec multilane_scene(const SceneParams& params, std::uint64_t seed) {
    Jitter j{SplitMix64(mix_seed({seed, 0x6d6c})), params.jitter};
    ScenarioSpec spec;
    spec.name = "multilane";
    spec.seed = seed;
    spec.duration = params.duration;
    constexpr int lanes = 3;
    constexpr double road = 700.0;
    for (int i = 0; i < lanes; ++i) {
        // lane 1 is leftmost
        LaneSpec l = straight_lane(i + 1, {0.0, 3.5 * (lanes - 1 - i)}, {road, 3.5 * (lanes - 1 - i)});
        if (i > 0) {
            l.left = i;
        }
        if (i + 1 < lanes) {
            l.right = i + 2;
        }
        spec.lanes.push_back(l);
    }
    spec.goal_lane = 1 + static_cast<int>(j.rng.uniform() * lanes) % lanes;
    spec.ego = Placement{2, 20.0, 0.0, 9.0 + j(1.0)};
    const int count = params.exo_count < 0 ? 5 : params.exo_count;
    std::vector<std::vector<double>> used(lanes);
    used[1].push_back(spec.ego.s);
    for (int i = 0; i < count; ++i) {
        const int lane = 1 + static_cast<int>(j.rng.uniform() * lanes) % lanes;
        double s = 0.0;
        for (int attempt = 0;; ++attempt) {
            s = j.between(0.0, 120.0);
            const auto& taken = used[static_cast<std::size_t>(lane - 1)];
            const bool clear = std::all_of(taken.begin(), taken.end(), [&](double t) { return std::abs(t - s) > 12.0; });
            if (clear || attempt > 50) {
                break;
            }
        }
        used[static_cast<std::size_t>(lane - 1)].push_back(s);
        IntentionKind kind = IntentionKind::lane_follow;
        const double u = j.rng.uniform();
        if (u < 0.15 && lane > 1) {
            kind = IntentionKind::lane_change_left;
        } else if (u < 0.3 && lane < lanes) {
            kind = IntentionKind::lane_change_right;
        }
        spec.exos.push_back(exo(i + 1, lane, s, j.between(6.0, 11.0), kind, j.between(7.0, 13.0), j.between(5.0, 12.0)));
    }
    return spec;
}

}  // namespace

std::vector<std::string> scene_templates() { return {"merge", "junction", "multilane"}; }

ScenarioSpec generate_scene(std::string_view name, const SceneParams& params, std::uint64_t seed) {
    if (name == "merge") {
        return merge_scene(params, seed);
    }
    if (name == "junction") {
        return junction_scene(params, seed);
    }
    if (name == "multilane") {
        return multilane_scene(params, seed);
    }
    throw UnknownTemplate("unknown scene template '" + std::string(name) + "'");
}

}  // namespace botdrive
