#include "crowdeval/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace crowdeval {

void SimParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(std::isfinite(timestep) && timestep > 0, "timestep must be > 0");
    require(std::isfinite(preferred_speed) && preferred_speed > 0, "preferred_speed must be > 0");
    require(std::isfinite(max_speed) && preferred_speed <= max_speed, "preferred_speed must not exceed max_speed");
    require(std::isfinite(agent_radius) && agent_radius > 0, "agent_radius must be > 0");
    require(std::isfinite(nav_cell) && nav_cell > 0, "nav_cell must be > 0");
    require(std::isfinite(max_sim_time) && max_sim_time > 0, "max_sim_time must be > 0");
    require(std::isfinite(goal_reach_tolerance) && goal_reach_tolerance >= 0, "goal_reach_tolerance must be >= 0");
    require(std::isfinite(repulsion_gain) && repulsion_gain >= 0, "repulsion_gain must be >= 0");
}

World::World(Configuration cfg, const SimParams& p) : config(std::move(cfg)), params(p) {
    params.validate();
    grid = build_nav_grid(config, params);
    for (const Goal& g : config.goals) {
        if (auto target = goal_target(grid, g)) goal_targets.emplace(g.id, *target);
    }
}

std::size_t SimState::active_count() const {
    return static_cast<std::size_t>(std::count_if(agents.begin(), agents.end(), [](const AgentState& a) { return a.active; }));
}

namespace {

// Portable uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

constexpr int kSpawnAttempts = 1000;

}  // namespace

std::vector<AgentState> spawn_agents(const Configuration& config, const SimParams& params) {
    const double r = params.agent_radius;
    std::vector<AgentState> agents;
    agents.reserve(static_cast<std::size_t>(std::max(0, config.total_agents())));

    for (std::size_t area_index = 0; area_index < config.spawn_areas.size(); ++area_index) {
        const SpawnArea& area = config.spawn_areas[area_index];
        if (area.rect.size.x() < 2 * r || area.rect.size.y() < 2 * r) {
            throw std::invalid_argument("spawn area " + std::to_string(area_index) + " is smaller than one agent footprint");
        }
        std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                          static_cast<std::uint32_t>(area_index)};
        std::mt19937_64 rng(seq);
        const Vec2 lo = area.rect.min + Vec2(r, r);
        const Vec2 span = area.rect.size - Vec2(2 * r, 2 * r);

        for (int k = 0; k < area.agent_count; ++k) {
            Vec2 candidate = Vec2::Zero();
            for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
                candidate = lo + Vec2(uniform01(rng) * span.x(), uniform01(rng) * span.y());
                const bool clear_of_obstacles = std::all_of(config.obstacles.begin(), config.obstacles.end(),
                    [&](const Obstacle& o) { return o.shape().distance(candidate) >= r; });
                const bool clear_of_agents = std::all_of(agents.begin(), agents.end(),
                    [&](const AgentState& a) { return (a.position - candidate).norm() >= 2 * r; });
                if (clear_of_obstacles && clear_of_agents) break;
            }
            AgentState a;
            a.id = static_cast<int>(agents.size());
            a.spawn_area = static_cast<int>(area_index);
            a.position = candidate;
            a.goal_id = area.goal_id;
            agents.push_back(std::move(a));
        }
    }
    return agents;
}

void plan_agent(AgentState& agent, const World& world) {
    const auto target = world.goal_targets.find(agent.goal_id);
    if (target == world.goal_targets.end()) throw NoPathError();
    const NavGrid& grid = world.grid;

    Vec2 start = agent.position;
    if (grid.blocked(grid.cell_of(start))) {
        const auto free = grid.nearest_free(start, world.params.agent_radius + 2.0 * grid.cell_size());
        if (!free) throw NoPathError();
        start = grid.center_of(*free);
    }
    Path path = plan_path(grid, start, target->second);
    if (start != agent.position) path.insert(path.begin(), agent.position);
    agent.path = std::move(path);
    agent.waypoint = 0;
}

namespace {

struct SpatialHash {
    double cell;
    std::unordered_map<std::int64_t, std::vector<int>> buckets;

    static std::int64_t key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); }
    std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell)); }

    void insert(int index, const Vec2& p) { buckets[key(coord(p.x()), coord(p.y()))].push_back(index); }

    std::vector<int> near(const Vec2& p, int reach) const {
        std::vector<int> out;
        const std::int64_t cx = coord(p.x());
        const std::int64_t cy = coord(p.y());
        for (std::int64_t dx = -reach; dx <= reach; ++dx) {
            for (std::int64_t dy = -reach; dy <= reach; ++dy) {
                const auto it = buckets.find(key(cx + dx, cy + dy));
                if (it != buckets.end()) out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

// Inverse-linear magnitude reaching zero at `range`.
double falloff(double gain, double distance, double range) {
    constexpr double min_distance = 0.05;
    return gain * (1.0 / std::max(distance, min_distance) - 1.0 / range);
}

void advance_waypoint(AgentState& a, const World& world) {
    const NavGrid& grid = world.grid;
    while (a.waypoint + 1 < a.path.size()) {
        if ((a.path[a.waypoint] - a.position).norm() < grid.cell_size() ||
            grid.line_of_sight(a.position, a.path[a.waypoint + 1])) {
            ++a.waypoint;
            continue;
        }
        break;
    }
}

Vec2 wall_repulsion(const Vec2& p, const World& world) {
    const double range = 2.0 * world.params.agent_radius;
    const double gain = world.params.repulsion_gain;
    Vec2 push = Vec2::Zero();
    for (const Obstacle& o : world.config.obstacles) {
        const Vec2 cp = o.shape().closest_point(p);
        const Vec2 away = p - cp;
        const double d = away.norm();
        if (d < range && d > 1e-12) push += falloff(gain, d, range) * (away / d);
    }
    const Environment& env = world.config.environment;
    const std::pair<double, Vec2> walls[] = {
        {p.x(), Vec2(1, 0)}, {env.width - p.x(), Vec2(-1, 0)}, {p.y(), Vec2(0, 1)}, {env.height - p.y(), Vec2(0, -1)}};
    for (const auto& [d, normal] : walls) {
        if (d < range) push += falloff(gain, d, range) * normal;
    }
    return push;
}

// Weidmann's speed-density relation, with density measured over the neighbour disc.
double density_speed_factor(const Vec2& p, const std::vector<int>& near, const std::vector<AgentState>& agents, int self,
                            double range) {
    constexpr double gamma = 1.913;    // 1/m^2
    constexpr double jam_density = 5.4;  // 1/m^2
    constexpr double pi = 3.14159265358979323846;
    int count = 0;
    for (int j : near) {
        if (j != self && (agents[j].position - p).norm() < range) ++count;
    }
    if (count == 0) return 1.0;
    const double density = std::min(count / (pi * range * range), jam_density);
    return std::max(0.0, 1.0 - std::exp(-gamma * (1.0 / density - 1.0 / jam_density)));
}

bool admissible(const Vec2& q, const World& world) {
    return std::none_of(world.config.obstacles.begin(), world.config.obstacles.end(),
                        [&](const Obstacle& o) { return o.shape().strictly_contains(q); });
}

}  // namespace

SimState step(SimState state, const World& world) {
    const SimParams& params = world.params;
    const double r = params.agent_radius;
    const double neighbour_range = 4.0 * r;
    const double dt = params.timestep;
    auto& agents = state.agents;

    SpatialHash hash{2.0 * r, {}};
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].active) hash.insert(static_cast<int>(i), agents[i].position);
    }

    // Desired directions first so head-on detection sees every agent's intent.
    std::vector<Vec2> direction(agents.size(), Vec2::Zero());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        AgentState& a = agents[i];
        if (!a.active || a.path.empty()) continue;
        advance_waypoint(a, world);
        a.replan_cooldown = std::max(0.0, a.replan_cooldown - dt);
        const Vec2& wp = a.path[a.waypoint];
        if (a.replan_cooldown <= 0.0 && (wp - a.position).norm() >= world.grid.cell_size() &&
            !world.grid.line_of_sight(a.position, wp)) {
            // Pushed out of sight of the next waypoint.
            try {
                plan_agent(a, world);
                advance_waypoint(a, world);
            } catch (const NoPathError&) {
            }
            a.replan_cooldown = 1.0;
        }
        const Vec2 to = a.path[a.waypoint] - a.position;
        if (to.norm() > 1e-12) direction[i] = to.normalized();
    }

    std::vector<Vec2> velocity(agents.size(), Vec2::Zero());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentState& a = agents[i];
        if (!a.active) continue;
        const std::vector<int> near = hash.near(a.position, 2);
        const double pace = params.preferred_speed * density_speed_factor(a.position, near, agents, static_cast<int>(i), neighbour_range);
        Vec2 v = pace * direction[i];

        for (int j : near) {
            if (j == static_cast<int>(i)) continue;
            const Vec2 offset = a.position - agents[j].position;
            const double d = offset.norm();
            if (d >= neighbour_range) continue;
            const Vec2 n = d > 1e-12 ? Vec2(offset / d) : (static_cast<int>(i) < j ? Vec2(1, 0) : Vec2(-1, 0));
            const double magnitude = falloff(params.repulsion_gain, d, neighbour_range);
            v += magnitude * n;
            // Opposing walkers both sidestep to their right.
            const double ahead = direction[i].dot(-n);
            const double opposed = -direction[i].dot(direction[j]);
            if (ahead > 0 && opposed > 0) v += magnitude * ahead * opposed * perp_right(direction[i]);
        }
        v += wall_repulsion(a.position, world);

        // Crowd pressure may slow or deflect an agent but never hurries it past its preferred pace.
        const double along = v.dot(direction[i]);
        if (along > pace) v -= (along - pace) * direction[i];

        const double speed = v.norm();
        if (speed > params.max_speed) v *= params.max_speed / speed;
        velocity[i] = v;
    }

    const Environment& env = world.config.environment;
    const double next_time = static_cast<double>(state.frame + 1) * dt;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        AgentState& a = agents[i];
        if (!a.active) continue;
        const Vec2 p = a.position;
        Vec2 q = p + velocity[i] * dt;
        q.x() = std::clamp(q.x(), 0.0, env.width);
        q.y() = std::clamp(q.y(), 0.0, env.height);
        if (!admissible(q, world)) {
            if (const Vec2 qx(q.x(), p.y()); admissible(qx, world)) {
                q = qx;
            } else if (const Vec2 qy(p.x(), q.y()); admissible(qy, world)) {
                q = qy;
            } else {
                q = p;
            }
        }
        const double moved = (q - p).norm();
        a.position = q;
        a.velocity = (q - p) / dt;
        a.speed = moved / dt;
        a.distance_walked += moved;
        a.speed_sum += a.speed;
        ++a.steps_taken;

        const Goal* goal = world.config.find_goal(a.goal_id);
        if (goal && (q - goal->center).norm() <= goal->radius + params.goal_reach_tolerance) {
            a.active = false;
            a.finish_time = next_time;
        }
    }
    ++state.frame;
    state.time = next_time;
    return state;
}

SimulationTrace simulate(const World& world, std::vector<AgentState> agents) {
    const SimParams& params = world.params;
    SimulationTrace trace;
    trace.params = params;
    trace.environment = world.config.environment;
    trace.goals = world.config.goals;
    trace.agent_count = static_cast<int>(agents.size());
    for (const AgentState& a : agents) trace.agent_goal.emplace(a.id, a.goal_id);

    SimState state;
    state.agents = std::move(agents);

    auto record = [&](const std::vector<bool>& was_active) {
        Frame f;
        f.time = state.time;
        for (std::size_t i = 0; i < state.agents.size(); ++i) {
            if (!was_active[i]) continue;
            const AgentState& a = state.agents[i];
            f.agents.push_back({a.id, a.position, a.speed});
        }
        trace.frames.push_back(std::move(f));
    };

    std::vector<bool> was_active(state.agents.size());
    for (std::size_t i = 0; i < state.agents.size(); ++i) was_active[i] = state.agents[i].active;
    record(was_active);

    const auto max_steps = static_cast<std::size_t>(std::llround(params.max_sim_time / params.timestep));
    while (state.active_count() > 0 && state.frame < max_steps) {
        for (std::size_t i = 0; i < state.agents.size(); ++i) was_active[i] = state.agents[i].active;
        state = step(std::move(state), world);
        record(was_active);
    }

    for (const AgentState& a : state.agents) {
        if (!a.finish_time) continue;
        const double mean_speed = a.steps_taken > 0 ? a.speed_sum / a.steps_taken : 0.0;
        trace.per_agent.emplace(a.id, AgentSummary{*a.finish_time, a.distance_walked, mean_speed});
    }
    trace.completed = state.active_count() == 0;
    return trace;
}

SimulationTrace run_simulation(const Configuration& config, const SimParams& params) {
    const World world(config, params);
    std::vector<AgentState> agents = spawn_agents(world.config, world.params);
    for (AgentState& a : agents) plan_agent(a, world);
    return simulate(world, std::move(agents));
}

ReferenceResult run_reference_simulation(const Configuration& config, const SimParams& params) {
    const ReferenceAgentSpec spec = select_reference_agent(config, params);
    const World world(config, params);
    AgentState agent;
    agent.id = 0;
    agent.spawn_area = spec.spawn_area;
    agent.position = spec.spawn_position;
    agent.goal_id = spec.goal_id;
    plan_agent(agent, world);

    const SimulationTrace trace = simulate(world, {std::move(agent)});
    if (!trace.completed) throw std::runtime_error("reference agent did not finish");
    const AgentSummary& s = trace.per_agent.at(0);
    return {s.t_k, s.s_k, s.w_k};
}

std::uint64_t trace_hash(const SimulationTrace& trace) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const char* data, int n) {
        for (int i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ull;
        }
    };
    char line[160];
    for (const Frame& f : trace.frames) {
        for (const AgentSample& s : f.agents) {
            const int n = std::snprintf(line, sizeof line, "%.17g,%d,%.17g,%.17g,%.17g\n", f.time, s.agent_id,
                                        s.position.x(), s.position.y(), s.speed);
            feed(line, n);
        }
    }
    for (const auto& [id, s] : trace.per_agent) {
        const int n = std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", id, s.t_k, s.w_k, s.s_k);
        feed(line, n);
    }
    return h;
}

}  // namespace crowdeval
