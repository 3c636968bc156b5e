#pragma once

#include "crowdeval/scenario.hpp"

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <vector>

namespace crowdeval {

struct Cell {
    int col = 0;
    int row = 0;
    bool operator==(const Cell&) const = default;
};

/// Occupancy grid over the environment. A cell is blocked when its center lies within
/// agent_radius of an obstacle; everything outside the environment counts as blocked.
class NavGrid {
public:
    NavGrid() = default;
    NavGrid(double cell_size, int cols, int rows);

    double cell_size() const { return cell_; }
    int cols() const { return static_cast<int>(blocked_.rows()); }
    int rows() const { return static_cast<int>(blocked_.cols()); }

    bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < cols() && c.row < rows(); }
    bool blocked(Cell c) const { return !in_bounds(c) || blocked_(c.col, c.row); }
    void set_blocked(Cell c, bool value) { blocked_(c.col, c.row) = value; }

    Cell cell_of(const Vec2& p) const;
    Vec2 center_of(Cell c) const;
    int blocked_count() const { return static_cast<int>(blocked_.count()); }

    /// True when the segment a-b crosses only free cells (supercover traversal).
    bool line_of_sight(const Vec2& a, const Vec2& b) const;

    /// Free cell nearest to p whose center is within max_distance of p, if any.
    std::optional<Cell> nearest_free(const Vec2& p, double max_distance) const;

    int index(Cell c) const { return c.row * cols() + c.col; }
    Cell cell_at(int index) const { return {index % cols(), index / cols()}; }

private:
    double cell_ = 1.0;
    // Indexed (col, row).
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> blocked_;
};

NavGrid build_nav_grid(const Configuration& config, const SimParams& params);

class NoPathError : public std::runtime_error {
public:
    NoPathError() : std::runtime_error("no path") {}
};

/// Waypoints from start to goal; the first entry is start and the last is goal.
using Path = std::vector<Vec2>;

/// 8-connected A* (diagonal cost sqrt 2, no corner cutting), then greedy line-of-sight
/// shortcutting. Throws NoPathError when start or goal is blocked or unreachable.
Path plan_path(const NavGrid& grid, const Vec2& start, const Vec2& goal);

double path_length(const Path& path);

/// Point the navigation targets for a goal: its center when free, else the nearest free cell
/// center inside the disc. Nullopt when the whole disc is blocked.
std::optional<Vec2> goal_target(const NavGrid& grid, const Goal& goal);

}  // namespace crowdeval
