#include "support.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>

namespace testing {

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(FIXTURE_DIR) / name; }

Scenario fixture(const std::string& name) { return parse_scenario(read_file(fixture_path(name))); }

const Configuration& config_of(const Scenario& s, const std::string& id) {
    for (const Configuration& c : s.configurations) {
        if (c.id == id) return c;
    }
    throw std::out_of_range("no configuration " + id);
}

std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("crowdeval_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Rect rect(double x, double y, double w, double h) { return {Vec2(x, y), Vec2(w, h)}; }

Configuration open_config(double width, double height, const Rect& spawn, int agents, const Vec2& goal,
                          double goal_radius, std::string id) {
    Configuration c;
    c.id = std::move(id);
    c.environment = {width, height};
    c.spawn_areas.push_back({spawn, agents, "exit"});
    c.goals.push_back({"exit", goal, goal_radius});
    return c;
}

SimulationTrace synthetic_trace(const Environment& env, const std::vector<std::vector<Vec2>>& frames, double dt) {
    SimulationTrace t;
    t.environment = env;
    t.params.timestep = dt;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        Frame f;
        f.time = static_cast<double>(k) * dt;
        for (std::size_t i = 0; i < frames[k].size(); ++i) f.agents.push_back({static_cast<int>(i), frames[k][i], 0.0});
        t.frames.push_back(std::move(f));
    }
    t.agent_count = frames.empty() ? 0 : static_cast<int>(frames.front().size());
    return t;
}

namespace {

constexpr int kDcol[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDrow[8] = {0, 0, 1, -1, 1, -1, 1, -1};

bool can_move(const NavGrid& grid, Cell c, int k) {
    const Cell n{c.col + kDcol[k], c.row + kDrow[k]};
    if (grid.blocked(n)) return false;
    if (k >= 4 && (grid.blocked({c.col + kDcol[k], c.row}) || grid.blocked({c.col, c.row + kDrow[k]}))) return false;
    return true;
}

}  // namespace

bool bfs_reachable(const NavGrid& grid, Cell from, Cell to) {
    if (grid.blocked(from) || grid.blocked(to)) return false;
    std::vector<char> seen(static_cast<std::size_t>(grid.cols() * grid.rows()), 0);
    std::deque<Cell> queue{from};
    seen[grid.index(from)] = 1;
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        if (c == to) return true;
        for (int k = 0; k < 8; ++k) {
            if (!can_move(grid, c, k)) continue;
            const Cell n{c.col + kDcol[k], c.row + kDrow[k]};
            if (!seen[grid.index(n)]) {
                seen[grid.index(n)] = 1;
                queue.push_back(n);
            }
        }
    }
    return false;
}

std::optional<double> dijkstra_length(const NavGrid& grid, Cell from, Cell to) {
    if (grid.blocked(from) || grid.blocked(to)) return std::nullopt;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(grid.cols() * grid.rows()), inf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[grid.index(from)] = 0.0;
    open.push({0.0, grid.index(from)});
    while (!open.empty()) {
        const auto [d, idx] = open.top();
        open.pop();
        if (d > dist[idx]) continue;
        const Cell c = grid.cell_at(idx);
        if (c == to) return d * grid.cell_size();
        for (int k = 0; k < 8; ++k) {
            if (!can_move(grid, c, k)) continue;
            const int n = grid.index({c.col + kDcol[k], c.row + kDrow[k]});
            const double nd = d + (k >= 4 ? std::sqrt(2.0) : 1.0);
            if (nd < dist[n]) {
                dist[n] = nd;
                open.push({nd, n});
            }
        }
    }
    return std::nullopt;
}

std::vector<std::string> trace_violations(const SimulationTrace& trace, const Configuration& config) {
    std::vector<std::string> out;
    auto fail = [&](const std::string& what) {
        if (out.size() < 20) out.push_back(what);
    };
    const SimParams& p = trace.params;
    std::map<int, Vec2> last;
    std::map<int, double> walked;
    std::map<int, double> last_time;
    std::size_t prev_active = std::numeric_limits<std::size_t>::max();
    const Rect bounds = config.environment.bounds();
    for (std::size_t k = 0; k < trace.frames.size(); ++k) {
        const Frame& f = trace.frames[k];
        if (k > 0 && std::abs(f.time - trace.frames[k - 1].time - p.timestep) > 1e-9) {
            fail("frame " + std::to_string(k) + ": time step irregular");
        }
        if (f.agents.size() > prev_active) fail("frame " + std::to_string(k) + ": active count increased");
        prev_active = f.agents.size();
        for (const AgentSample& s : f.agents) {
            std::ostringstream where;
            where << "frame " << k << " agent " << s.agent_id;
            if (s.speed > p.max_speed + 1e-9) fail(where.str() + ": speed " + std::to_string(s.speed));
            if (!bounds.contains(s.position)) fail(where.str() + ": outside environment");
            for (const Obstacle& o : config.obstacles) {
                if (o.shape().strictly_contains(s.position)) fail(where.str() + ": inside obstacle");
            }
            if (const auto it = last.find(s.agent_id); it != last.end()) {
                const double d = (s.position - it->second).norm();
                if (d > p.max_speed * p.timestep + 1e-9) fail(where.str() + ": displacement " + std::to_string(d));
                walked[s.agent_id] += d;
            }
            last[s.agent_id] = s.position;
            last_time[s.agent_id] = f.time;
        }
    }
    double t_max = 0.0;
    for (const auto& [id, summary] : trace.per_agent) {
        const std::string who = "agent " + std::to_string(id);
        if (std::abs(summary.w_k - walked[id]) >= 1e-6) fail(who + ": distance walked disagrees with frames");
        if (std::abs(summary.t_k - last_time[id]) > 1e-9) fail(who + ": finish time is not its last frame");
        const Vec2 start = trace.frames.front().agents.at(static_cast<std::size_t>(id)).position;
        if (summary.w_k < 0.99 * (last[id] - start).norm()) fail(who + ": shorter than straight line");
        if (summary.s_k > p.max_speed + 1e-9) fail(who + ": mean speed above max");
        t_max = std::max(t_max, summary.t_k);
    }
    if (trace.completed && static_cast<int>(trace.per_agent.size()) != trace.agent_count) {
        fail("completed but not every agent finished");
    }
    if (trace.completed && std::abs(trace.frames.back().time - t_max) > 1e-9) fail("last frame is not t_g");
    return out;
}

const ResultsBundle& cached_results(const std::string& fixture_name, int runs) {
    static std::mutex mutex;
    static std::map<std::pair<std::string, int>, ResultsBundle> cache;
    std::lock_guard lock(mutex);
    const auto key = std::make_pair(fixture_name, runs);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    RunOptions options;
    options.runs = runs;
    return cache.emplace(key, run_scenario(fixture(fixture_name), options)).first->second;
}

}  // namespace testing
