#include "botdrive/geometry.hpp"

#include <array>

namespace botdrive {

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::fmod(angle, two_pi);
    if (wrapped <= -std::numbers::pi) {
        wrapped += two_pi;
    } else if (wrapped > std::numbers::pi) {
        wrapped -= two_pi;
    }
    return wrapped;
}

namespace {

std::array<Vec2, 2> box_axes(const OrientedBox& box) {
    const Vec2 u = unit_from_heading(box.heading);
    return {u, Vec2{-u.y, u.x}};
}

double projected_radius(const OrientedBox& box, Vec2 axis) {
    const auto axes = box_axes(box);
    return 0.5 * box.length * std::abs(dot(axes[0], axis)) + 0.5 * box.width * std::abs(dot(axes[1], axis));
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const Vec2 offset = b.center - a.center;
    // Cheap reject on bounding circles.
    const double ra = 0.5 * std::hypot(a.length, a.width);
    const double rb = 0.5 * std::hypot(b.length, b.width);
    if (dot(offset, offset) > (ra + rb) * (ra + rb)) {
        return false;
    }
    for (const auto& box : {a, b}) {
        for (const Vec2 axis : box_axes(box)) {
            const double separation = std::abs(dot(offset, axis));
            if (separation > projected_radius(a, axis) + projected_radius(b, axis)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace botdrive
