#include "crowdeval/geometry.hpp"

#include <algorithm>
#include <limits>

namespace crowdeval {

std::array<Vec2, 4> OrientedRect::corners() const {
    const Vec2 u = axis_u() * half_extent.x();
    const Vec2 v = axis_v() * half_extent.y();
    return {center - u - v, center + u - v, center + u + v, center - u + v};
}

bool OrientedRect::strictly_contains(const Vec2& p) const {
    const Vec2 l = to_local(p);
    constexpr double eps = 1e-12;
    return std::abs(l.x()) < half_extent.x() - eps && std::abs(l.y()) < half_extent.y() - eps;
}

Vec2 OrientedRect::closest_point(const Vec2& p) const {
    const Vec2 l = to_local(p);
    const double cu = std::clamp(l.x(), -half_extent.x(), half_extent.x());
    const double cv = std::clamp(l.y(), -half_extent.y(), half_extent.y());
    return center + cu * axis_u() + cv * axis_v();
}

OrientedRect to_oriented(const Rect& r) { return {r.center(), 0.5 * r.size, 0.0}; }

namespace {

// Projection interval of a rectangle's corners onto an axis.
std::pair<double, double> project(const OrientedRect& r, const Vec2& axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec2& c : r.corners()) {
        const double s = c.dot(axis);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {lo, hi};
}

}  // namespace

bool intersects(const OrientedRect& a, const OrientedRect& b) {
    constexpr double eps = 1e-9;
    for (const Vec2& axis : {a.axis_u(), a.axis_v(), b.axis_u(), b.axis_v()}) {
        const auto [a_lo, a_hi] = project(a, axis);
        const auto [b_lo, b_hi] = project(b, axis);
        if (a_hi <= b_lo + eps || b_hi <= a_lo + eps) return false;
    }
    return true;
}

}  // namespace crowdeval
