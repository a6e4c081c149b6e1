#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "botdrive/random.hpp"
#include "botdrive/road.hpp"
#include "botdrive/scene_generator.hpp"
#include "formulas.hpp"
#include "support.hpp"

using namespace botdrive;

namespace {

// 60 degree arc of radius 40 as a 24-segment polyline, turning left.
Lane arc_lane() {
    Lane l;
    l.id = LaneId{1};
    const double r = 40.0;
    for (int i = 0; i <= 24; ++i) {
        const double a = (std::numbers::pi / 3.0) * i / 24.0;
        l.centerline.push_back({r * std::sin(a), r - r * std::cos(a)});
    }
    return l;
}

RoadNetwork arc_network() { return RoadNetwork({arc_lane()}, LaneId{1}); }

}  // namespace

TEST_CASE("lane length is the polyline arc length") {
    const RoadNetwork net = arc_network();
    const Lane& l = net.lane(LaneId{1});
    double total = 0.0;
    for (std::size_t i = 1; i < l.centerline.size(); ++i) {
        total += distance(l.centerline[i - 1], l.centerline[i]);
    }
    CHECK(l.length() == doctest::Approx(total).epsilon(1e-12));
    // chord of 2.5 degrees, 24 times
    CHECK(l.length() == doctest::Approx(24 * 2 * 40 * std::sin(std::numbers::pi / 144.0)).epsilon(1e-12));
}

TEST_CASE("point_at interpolates linearly inside a segment") {
    const RoadNetwork net = arc_network();
    const Lane& l = net.lane(LaneId{1});
    const double s_mid = 0.5 * (l.vertex_s[3] + l.vertex_s[4]);
    const Pose p = point_at(l, s_mid);
    const Vec2 mid = (l.centerline[3] + l.centerline[4]) * 0.5;
    CHECK(p.position.x == doctest::Approx(mid.x).epsilon(1e-12));
    CHECK(p.position.y == doctest::Approx(mid.y).epsilon(1e-12));
    const Vec2 dir = l.centerline[4] - l.centerline[3];
    CHECK(p.heading == doctest::Approx(std::atan2(dir.y, dir.x)));
    CHECK(point_at(l, 0.0).position == l.centerline.front());
    CHECK(distance(point_at(l, l.length()).position, l.centerline.back()) < 1e-9);
}

TEST_CASE("point_at rejects arc lengths off the lane") {
    const RoadNetwork net = arc_network();
    const Lane& l = net.lane(LaneId{1});
    CHECK_THROWS_AS(point_at(l, -0.5), OutOfRange);
    CHECK_THROWS_AS(point_at(l, l.length() + 0.5), OutOfRange);
    CHECK(distance(point_at_clamped(l, l.length() + 5.0).position, l.centerline.back()) < 1e-9);
}

TEST_CASE("projection matches a dense-sampling oracle") {
    const Lane lane = arc_network().lane(LaneId{1});
    SplitMix64 rng(11);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const double s = 1.0 + (lane.length() - 2.0) * rng.uniform();
        const double d = -1.7 + 3.4 * rng.uniform();
        const Pose p = point_at(lane, s);
        const Vec2 q = p.position + Vec2{-std::sin(p.heading), std::cos(p.heading)} * d;
        const LaneProjection got = project_onto_lane(lane, q);
        const oracle::DenseFoot want = oracle::dense_projection(lane.centerline, q, 2e-3);
        REQUIRE(got.interior);
        CHECK(std::abs(got.distance - std::abs(want.d)) < 1.5e-3);
        CHECK(got.d == doctest::Approx(want.d).epsilon(1e-3));
        CHECK(std::abs(got.s - want.s) < 0.05);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("project and point_at round trip on the centerline") {
    const RoadNetwork net = arc_network();
    const Lane& l = net.lane(LaneId{1});
    for (double s = 0.0; s <= l.length(); s += 0.37) {
        const LaneProjection p = net.project(point_at(l, s).position);
        CHECK(p.lane == LaneId{1});
        CHECK(p.s == doctest::Approx(s).epsilon(1e-9));
        CHECK(std::abs(p.d) < 1e-9);
    }
}

TEST_CASE("lateral offset is positive to the left of travel") {
    const RoadNetwork net = testing::straight_network(1);
    CHECK(net.project_onto(LaneId{1}, {50.0, 1.0}).d == doctest::Approx(1.0));
    CHECK(net.project_onto(LaneId{1}, {50.0, -1.0}).d == doctest::Approx(-1.0));
    CHECK_FALSE(net.project_onto(LaneId{1}, {-3.0, 0.0}).interior);
}

TEST_CASE("project picks the lane under the point and honours the hint") {
    const RoadNetwork net = testing::straight_network(3);
    // lanes at y = 7, 3.5, 0
    CHECK(net.project({100.0, 7.2}).lane == LaneId{1});
    CHECK(net.project({100.0, 3.0}).lane == LaneId{2});
    CHECK(net.project({100.0, -0.4}).lane == LaneId{3});
    // exactly on the boundary: the hinted lane keeps the point
    CHECK(net.project({100.0, 1.75}, LaneId{3}).lane == LaneId{3});
    CHECK(net.project({100.0, 1.75}, LaneId{2}).lane == LaneId{2});
    CHECK_FALSE(net.try_project({100.0, 60.0}).has_value());
    CHECK_THROWS_AS(net.project({100.0, 60.0}), NoLaneWithinRadius);
}

TEST_CASE("network construction rejects inconsistent graphs") {
    Lane a;
    a.id = LaneId{1};
    a.centerline = {{0, 0}, {10, 0}};
    Lane b = a;
    CHECK_THROWS_AS(RoadNetwork({a, b}, LaneId{1}), RoadError);
    b.id = LaneId{2};
    b.centerline = {{0, 3.5}, {10, 3.5}};
    b.right_neighbor = LaneId{1};
    CHECK_THROWS_AS(RoadNetwork({a, b}, LaneId{1}), RoadError);
    a.left_neighbor = LaneId{2};
    CHECK_NOTHROW(RoadNetwork({a, b}, LaneId{1}));
    CHECK_THROWS_AS(RoadNetwork({a, b}, LaneId{7}), RoadError);
    a.successors = {LaneId{9}};
    CHECK_THROWS_AS(RoadNetwork({a, b}, LaneId{1}), RoadError);
    Lane c;
    c.id = LaneId{3};
    c.centerline = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(RoadNetwork({c}, LaneId{3}), RoadError);
}

TEST_CASE("lane-change distance agrees with a BFS oracle on generated roads") {
    for (const std::string& name : scene_templates()) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const RoadNetwork net = build_network(generate_scene(name, {}, seed));
            std::map<int, std::vector<int>> lateral;
            std::map<int, std::vector<int>> successors;
            for (const Lane& l : net.lanes()) {
                if (l.left_neighbor) {
                    lateral[l.id.value].push_back(l.left_neighbor->value);
                }
                if (l.right_neighbor) {
                    lateral[l.id.value].push_back(l.right_neighbor->value);
                }
                for (LaneId s : l.successors) {
                    successors[l.id.value].push_back(s.value);
                }
            }
            for (const Lane& from : net.lanes()) {
                for (const Lane& to : net.lanes()) {
                    const int want = oracle::bfs_hops(lateral, successors, from.id.value, to.id.value);
                    const auto got = net.lane_change_distance(from.id, to.id);
                    CHECK(got.value_or(-1) == want);
                }
                CHECK(net.reaches_goal(from.id) == net.lane_change_distance(from.id, net.goal_lane()).has_value());
            }
        }
    }
}

TEST_CASE("lane-change distance is a quasi-metric") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RoadNetwork net = build_network(generate_scene("junction", {}, seed));
        for (const Lane& a : net.lanes()) {
            CHECK(net.lane_change_distance(a.id, a.id) == 0);
            for (const Lane& b : net.lanes()) {
                for (const Lane& c : net.lanes()) {
                    const auto ab = net.lane_change_distance(a.id, b.id);
                    const auto bc = net.lane_change_distance(b.id, c.id);
                    const auto ac = net.lane_change_distance(a.id, c.id);
                    if (ab && bc) {
                        REQUIRE(ac.has_value());
                        CHECK(*ac <= *ab + *bc);
                    }
                }
            }
        }
    }
}

TEST_CASE("straight three-lane hops") {
    const RoadNetwork net = testing::straight_network(3);
    CHECK(net.lane_change_distance(LaneId{3}, LaneId{1}) == 2);
    CHECK(net.lane_change_distance(LaneId{1}, LaneId{3}) == 2);
    CHECK(net.lane_change_distance(LaneId{2}, LaneId{1}) == 1);
}
