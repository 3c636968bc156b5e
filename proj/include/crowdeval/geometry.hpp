#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>

namespace crowdeval {

using Vec2 = Eigen::Vector2d;

/// Axis-aligned rectangle given by its minimum corner and extent.
struct Rect {
    Vec2 min = Vec2::Zero();
    Vec2 size = Vec2::Zero();

    Vec2 max() const { return min + size; }
    Vec2 center() const { return min + 0.5 * size; }
    double area() const { return size.x() * size.y(); }

    bool contains(const Vec2& p) const {
        return p.x() >= min.x() && p.y() >= min.y() && p.x() <= max().x() && p.y() <= max().y();
    }
    bool contains(const Rect& other) const { return contains(other.min) && contains(other.max()); }
};

/// Rectangle rotated about its center. Rotation is counter-clockwise, in radians.
struct OrientedRect {
    Vec2 center = Vec2::Zero();
    Vec2 half_extent = Vec2::Zero();
    double rotation = 0.0;

    Vec2 axis_u() const { return {std::cos(rotation), std::sin(rotation)}; }
    Vec2 axis_v() const { return {-std::sin(rotation), std::cos(rotation)}; }

    /// Point expressed in the rectangle's local frame.
    Vec2 to_local(const Vec2& p) const {
        const Vec2 d = p - center;
        return {d.dot(axis_u()), d.dot(axis_v())};
    }

    std::array<Vec2, 4> corners() const;

    /// Strict interior test: points on the boundary are outside.
    bool strictly_contains(const Vec2& p) const;

    /// Closest point on the rectangle (surface or interior) to p.
    Vec2 closest_point(const Vec2& p) const;

    /// Euclidean distance from p to the rectangle; 0 inside.
    double distance(const Vec2& p) const { return (p - closest_point(p)).norm(); }
};

OrientedRect to_oriented(const Rect& r);

/// Separating-axis test. Touching rectangles (shared edge or corner) do not intersect.
bool intersects(const OrientedRect& a, const OrientedRect& b);

inline Vec2 perp_right(const Vec2& v) { return {v.y(), -v.x()}; }

}  // namespace crowdeval
