#include "crowdeval/nav_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace crowdeval {

NavGrid::NavGrid(double cell_size, int cols, int rows)
    : cell_(cell_size), blocked_(Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(cols, rows, false)) {}

Cell NavGrid::cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor(p.x() / cell_)), static_cast<int>(std::floor(p.y() / cell_))};
}

Vec2 NavGrid::center_of(Cell c) const { return {(c.col + 0.5) * cell_, (c.row + 0.5) * cell_}; }

bool NavGrid::line_of_sight(const Vec2& a, const Vec2& b) const {
    Cell c = cell_of(a);
    const Cell end = cell_of(b);
    if (blocked(c) || blocked(end)) return false;

    const Vec2 d = b - a;
    const int step_x = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
    const int step_y = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double delta_x = step_x != 0 ? cell_ / std::abs(d.x()) : inf;
    const double delta_y = step_y != 0 ? cell_ / std::abs(d.y()) : inf;
    auto boundary = [&](double pos, int idx, int step, double dir) {
        if (step == 0) return inf;
        const double edge = (step > 0 ? idx + 1 : idx) * cell_;
        return (edge - pos) / dir;
    };
    double t_x = boundary(a.x(), c.col, step_x, d.x());
    double t_y = boundary(a.y(), c.row, step_y, d.y());

    // Crossing a cell corner exactly touches both neighbours; both must be free.
    constexpr double eps = 1e-12;
    int budget = std::abs(end.col - c.col) + std::abs(end.row - c.row);
    while (!(c == end) && budget > 0) {
        if (std::abs(t_x - t_y) < eps) {
            if (blocked({c.col + step_x, c.row}) || blocked({c.col, c.row + step_y})) return false;
            c.col += step_x;
            c.row += step_y;
            t_x += delta_x;
            t_y += delta_y;
            budget -= 2;
        } else if (t_x < t_y) {
            c.col += step_x;
            t_x += delta_x;
            --budget;
        } else {
            c.row += step_y;
            t_y += delta_y;
            --budget;
        }
        if (blocked(c)) return false;
    }
    return true;
}

std::optional<Cell> NavGrid::nearest_free(const Vec2& p, double max_distance) const {
    const Cell origin = cell_of(p);
    const int reach = static_cast<int>(std::ceil(max_distance / cell_)) + 1;
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
            const Cell c{origin.col + dc, origin.row + dr};
            if (blocked(c)) continue;
            const double d = (center_of(c) - p).norm();
            if (d <= max_distance && d < best_d) {
                best_d = d;
                best = c;
            }
        }
    }
    return best;
}

NavGrid build_nav_grid(const Configuration& config, const SimParams& params) {
    const Environment& env = config.environment;
    const int cols = static_cast<int>(std::ceil(env.width / params.nav_cell - 1e-9));
    const int rows = static_cast<int>(std::ceil(env.height / params.nav_cell - 1e-9));
    NavGrid grid(params.nav_cell, cols, rows);

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Vec2 p = grid.center_of({c, r});
            bool blocked = p.x() > env.width || p.y() > env.height;
            for (const Obstacle& o : config.obstacles) {
                if (blocked) break;
                blocked = o.shape().distance(p) < params.agent_radius;
            }
            grid.set_blocked({c, r}, blocked);
        }
    }
    return grid;
}

double path_length(const Path& path) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) total += (path[i] - path[i - 1]).norm();
    return total;
}

namespace {

std::vector<Cell> astar(const NavGrid& grid, Cell start, Cell goal) {
    const int n = grid.cols() * grid.rows();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g(n, inf);
    std::vector<int> parent(n, -1);
    std::vector<bool> closed(n, false);

    auto heuristic = [&](Cell c) {
        const double dx = std::abs(c.col - goal.col);
        const double dy = std::abs(c.row - goal.row);
        return (dx + dy) + (std::sqrt(2.0) - 2.0) * std::min(dx, dy);
    };

    // (f, h, index): ties resolve toward the goal, then by index, so expansion order is fixed.
    using Entry = std::tuple<double, double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const int s = grid.index(start);
    const int t = grid.index(goal);
    g[s] = 0.0;
    open.emplace(heuristic(start), heuristic(start), s);

    static constexpr int dcol[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int drow[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    while (!open.empty()) {
        const auto [f, h, idx] = open.top();
        open.pop();
        if (closed[idx]) continue;
        closed[idx] = true;
        if (idx == t) break;
        const Cell c = grid.cell_at(idx);
        for (int k = 0; k < 8; ++k) {
            const Cell nb{c.col + dcol[k], c.row + drow[k]};
            if (grid.blocked(nb)) continue;
            const bool diagonal = k >= 4;
            if (diagonal && (grid.blocked({c.col + dcol[k], c.row}) || grid.blocked({c.col, c.row + drow[k]}))) continue;
            const int ni = grid.index(nb);
            if (closed[ni]) continue;
            const double cand = g[idx] + (diagonal ? std::sqrt(2.0) : 1.0);
            if (cand < g[ni]) {
                g[ni] = cand;
                parent[ni] = idx;
                const double hn = heuristic(nb);
                open.emplace(cand + hn, hn, ni);
            }
        }
    }
    if (!closed[t]) throw NoPathError();

    std::vector<Cell> cells;
    for (int i = t; i != -1; i = parent[i]) cells.push_back(grid.cell_at(i));
    std::reverse(cells.begin(), cells.end());
    return cells;
}

}  // namespace

Path plan_path(const NavGrid& grid, const Vec2& start, const Vec2& goal) {
    const Cell s = grid.cell_of(start);
    const Cell t = grid.cell_of(goal);
    if (grid.blocked(s) || grid.blocked(t)) throw NoPathError();

    const std::vector<Cell> cells = astar(grid, s, t);
    Path raw;
    raw.reserve(cells.size() + 1);
    raw.push_back(start);
    for (std::size_t i = 1; i + 1 < cells.size(); ++i) raw.push_back(grid.center_of(cells[i]));
    raw.push_back(goal);

    // Greedy shortcutting: from each kept waypoint jump to the furthest visible one.
    Path smooth{raw.front()};
    std::size_t i = 0;
    while (i + 1 < raw.size()) {
        std::size_t j = raw.size() - 1;
        while (j > i + 1 && !grid.line_of_sight(raw[i], raw[j])) --j;
        smooth.push_back(raw[j]);
        i = j;
    }
    return smooth;
}

std::optional<Vec2> goal_target(const NavGrid& grid, const Goal& goal) {
    if (!grid.blocked(grid.cell_of(goal.center))) return goal.center;
    if (auto c = grid.nearest_free(goal.center, goal.radius)) return grid.center_of(*c);
    return std::nullopt;
}

}  // namespace crowdeval
