#include "botdrive/road.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace botdrive {

namespace {

constexpr double kSTolerance = 1e-9;

std::string lane_name(LaneId id) { return "lane " + std::to_string(id.value); }

}  // namespace

Pose point_at(const Lane& lane, double s) {
    if (!(s >= -kSTolerance && s <= lane.length() + kSTolerance)) {
        throw OutOfRange("point_at: s=" + std::to_string(s) + " outside [0, " + std::to_string(lane.length()) +
                         "] on " + lane_name(lane.id));
    }
    return point_at_clamped(lane, s);
}

Pose point_at_clamped(const Lane& lane, double s) {
    const auto& pts = lane.centerline;
    const auto& cum = lane.vertex_s;
    s = std::clamp(s, 0.0, lane.length());
    // First vertex with arc length > s; segment is [seg, seg + 1].
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t seg = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    seg = std::min(seg, pts.size() - 2);
    const Vec2 a = pts[seg];
    const Vec2 b = pts[seg + 1];
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = (s - cum[seg]) / seg_len;
    const Vec2 dir = b - a;
    return Pose{a + dir * t, std::atan2(dir.y, dir.x)};
}

LaneProjection project_onto_lane(const Lane& lane, Vec2 p) {
    const auto& pts = lane.centerline;
    const std::size_t n_seg = pts.size() - 1;
    LaneProjection best;
    best.lane = lane.id;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_seg; ++i) {
        const Vec2 a = pts[i];
        const Vec2 dir = pts[i + 1] - a;
        const double seg_len = lane.vertex_s[i + 1] - lane.vertex_s[i];
        const double raw_t = dot(p - a, dir) / (seg_len * seg_len);
        const double t = std::clamp(raw_t, 0.0, 1.0);
        const Vec2 foot = a + dir * t;
        const double dist = distance(p, foot);
        if (dist < best.distance) {
            best.distance = dist;
            best.s = lane.vertex_s[i] + t * seg_len;
            const double lateral = cross(dir, p - a) / seg_len;
            const bool before_start = i == 0 && raw_t < 0.0;
            const bool past_end = i + 1 == n_seg && raw_t > 1.0;
            best.interior = !(before_start || past_end);
            if (best.interior) {
                best.d = lateral >= 0.0 ? dist : -dist;
            } else {
                best.d = lateral;
            }
        }
    }
    return best;
}

RoadNetwork::RoadNetwork(std::vector<Lane> lanes, LaneId goal_lane) : lanes_(std::move(lanes)), goal_lane_(goal_lane) {
    if (lanes_.empty()) {
        throw RoadError("road network has no lanes");
    }
    std::sort(lanes_.begin(), lanes_.end(), [](const Lane& a, const Lane& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        Lane& lane = lanes_[i];
        if (!index_.emplace(lane.id.value, i).second) {
            throw RoadError("duplicate " + lane_name(lane.id));
        }
        if (lane.centerline.size() < 2) {
            throw RoadError(lane_name(lane.id) + ": centerline needs at least 2 points");
        }
        if (!(lane.width > 0.0) || !std::isfinite(lane.width)) {
            throw RoadError(lane_name(lane.id) + ": width must be positive");
        }
        lane.vertex_s.assign(1, 0.0);
        for (std::size_t k = 1; k < lane.centerline.size(); ++k) {
            const double seg = distance(lane.centerline[k - 1], lane.centerline[k]);
            if (!(seg > 0.0)) {
                throw RoadError(lane_name(lane.id) + ": consecutive centerline points must be distinct");
            }
            lane.vertex_s.push_back(lane.vertex_s.back() + seg);
        }
        max_width_ = std::max(max_width_, lane.width);
    }
    if (!contains(goal_lane_)) {
        throw RoadError("goal " + lane_name(goal_lane_) + " does not exist");
    }
    for (const Lane& lane : lanes_) {
        for (const LaneId succ : lane.successors) {
            if (!contains(succ)) {
                throw RoadError(lane_name(lane.id) + ": successor " + lane_name(succ) + " does not exist");
            }
        }
        if (lane.left_neighbor) {
            if (!contains(*lane.left_neighbor)) {
                throw RoadError(lane_name(lane.id) + ": left neighbor does not exist");
            }
            const Lane& other = this->lane(*lane.left_neighbor);
            if (other.right_neighbor != lane.id) {
                throw RoadError(lane_name(lane.id) + ": left neighbor " + lane_name(other.id) +
                                " does not list it as right neighbor");
            }
        }
        if (lane.right_neighbor) {
            if (!contains(*lane.right_neighbor)) {
                throw RoadError(lane_name(lane.id) + ": right neighbor does not exist");
            }
            const Lane& other = this->lane(*lane.right_neighbor);
            if (other.left_neighbor != lane.id) {
                throw RoadError(lane_name(lane.id) + ": right neighbor " + lane_name(other.id) +
                                " does not list it as left neighbor");
            }
        }
    }

    const std::size_t n = lanes_.size();
    predecessors_.assign(n, {});
    for (const Lane& lane : lanes_) {
        for (const LaneId succ : lane.successors) {
            predecessors_[index_of(succ)].push_back(lane.id);
        }
    }

    // 0-1 BFS from every lane: successor edges cost 0, neighbor edges cost 1.
    hops_.assign(n * n, unreachable);
    for (std::size_t src = 0; src < n; ++src) {
        int* row = hops_.data() + src * n;
        std::deque<std::size_t> queue{src};
        row[src] = 0;
        std::vector<bool> done(n, false);
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            if (done[u]) {
                continue;
            }
            done[u] = true;
            const Lane& lane = lanes_[u];
            auto relax = [&](LaneId to, int cost) {
                const std::size_t v = index_of(to);
                const int cand = row[u] + cost;
                if (row[v] == unreachable || cand < row[v]) {
                    row[v] = cand;
                    if (cost == 0) {
                        queue.push_front(v);
                    } else {
                        queue.push_back(v);
                    }
                }
            };
            for (const LaneId succ : lane.successors) {
                relax(succ, 0);
            }
            if (lane.left_neighbor) {
                relax(*lane.left_neighbor, 1);
            }
            if (lane.right_neighbor) {
                relax(*lane.right_neighbor, 1);
            }
        }
    }
    reaches_goal_.resize(n);
    const std::size_t goal_idx = index_of(goal_lane_);
    for (std::size_t i = 0; i < n; ++i) {
        reaches_goal_[i] = hops_[i * n + goal_idx] != unreachable;
    }
}

std::size_t RoadNetwork::index_of(LaneId id) const {
    const auto it = index_.find(id.value);
    if (it == index_.end()) {
        throw RoadError("unknown " + lane_name(id));
    }
    return it->second;
}

const Lane& RoadNetwork::lane(LaneId id) const { return lanes_[index_of(id)]; }

std::span<const LaneId> RoadNetwork::predecessors(LaneId id) const { return predecessors_[index_of(id)]; }

bool RoadNetwork::reaches_goal(LaneId id) const { return reaches_goal_[index_of(id)]; }

std::optional<int> RoadNetwork::lane_change_distance(LaneId from, LaneId to) const {
    const int h = hops_[index_of(from) * lanes_.size() + index_of(to)];
    if (h == unreachable) {
        return std::nullopt;
    }
    return h;
}

LaneProjection RoadNetwork::project_onto(LaneId id, Vec2 position) const {
    return project_onto_lane(lane(id), position);
}

bool RoadNetwork::accepts(const Lane& lane, const LaneProjection& p) const {
    return p.interior && std::abs(p.d) <= 0.5 * lane.width + 1e-9;
}

std::optional<LaneProjection> RoadNetwork::try_project(Vec2 position, std::optional<LaneId> hint) const {
    if (lanes_.empty()) {
        return std::nullopt;
    }
    if (hint && contains(*hint)) {
        const Lane& h = lane(*hint);
        const LaneProjection p = project_onto_lane(h, position);
        if (accepts(h, p)) {
            return p;
        }
        std::optional<LaneProjection> local;
        auto consider = [&](LaneId id) {
            const Lane& l = lane(id);
            const LaneProjection q = project_onto_lane(l, position);
            if (accepts(l, q) && (!local || q.distance < local->distance)) {
                local = q;
            }
        };
        if (h.left_neighbor) {
            consider(*h.left_neighbor);
        }
        if (h.right_neighbor) {
            consider(*h.right_neighbor);
        }
        for (const LaneId succ : h.successors) {
            consider(succ);
        }
        for (const LaneId pred : predecessors(h.id)) {
            consider(pred);
        }
        if (local) {
            return local;
        }
    }
    std::optional<LaneProjection> best_accepted;
    std::optional<LaneProjection> nearest;
    for (const Lane& l : lanes_) {
        const LaneProjection q = project_onto_lane(l, position);
        if (accepts(l, q) && (!best_accepted || q.distance < best_accepted->distance)) {
            best_accepted = q;
        }
        if (!nearest || q.distance < nearest->distance) {
            nearest = q;
        }
    }
    if (best_accepted) {
        return best_accepted;
    }
    if (nearest->distance > 2.0 * max_width_) {
        return std::nullopt;
    }
    return nearest;
}

LaneProjection RoadNetwork::project(Vec2 position, std::optional<LaneId> hint) const {
    if (auto p = try_project(position, hint)) {
        return *p;
    }
    throw NoLaneWithinRadius("no lane within " + std::to_string(2.0 * max_width_) + " m of (" +
                             std::to_string(position.x) + ", " + std::to_string(position.y) + ")");
}

}  // namespace botdrive
