#include "crowdeval/scenario.hpp"

#include "crowdeval/nav_grid.hpp"
#include "crowdeval/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace crowdeval {

int Configuration::total_agents() const {
    return std::accumulate(spawn_areas.begin(), spawn_areas.end(), 0,
                           [](int sum, const SpawnArea& s) { return sum + s.agent_count; });
}

const Goal* Configuration::find_goal(const std::string& goal_id) const {
    const auto it = std::find_if(goals.begin(), goals.end(), [&](const Goal& g) { return g.id == goal_id; });
    return it == goals.end() ? nullptr : &*it;
}

namespace {

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

std::string spawn_label(std::size_t i) { return "spawn area " + std::to_string(i); }
std::string obstacle_label(std::size_t i) { return "obstacle " + std::to_string(i); }

}  // namespace

ValidationReport validate_configuration(const Configuration& config, const SimParams& params) {
    ValidationReport report;
    auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    const Environment& env = config.environment;
    if (!(std::isfinite(env.width) && std::isfinite(env.height) && env.width > 0 && env.height > 0)) {
        fail("environment width and height must be finite and positive");
        return report;  // every other check depends on the bounds
    }
    const Rect bounds = env.bounds();
    constexpr double eps = 1e-9;
    const Rect loose{bounds.min - Vec2(eps, eps), bounds.size + Vec2(2 * eps, 2 * eps)};

    if (config.spawn_areas.empty()) fail("configuration has no spawn area");
    if (config.goals.empty()) fail("configuration has no goal");

    std::set<std::string> goal_ids;
    for (const Goal& g : config.goals) {
        if (!goal_ids.insert(g.id).second) fail("duplicate goal id '" + g.id + "'");
        if (!finite(g.center) || !loose.contains(g.center)) fail("goal '" + g.id + "' center outside environment");
        if (!(std::isfinite(g.radius) && g.radius > 0)) fail("goal '" + g.id + "' radius must be positive");
    }

    bool obstacles_ok = true;
    for (std::size_t i = 0; i < config.obstacles.size(); ++i) {
        const Obstacle& o = config.obstacles[i];
        if (!finite(o.center) || !finite(o.size) || !std::isfinite(o.rotation) || o.size.x() <= 0 || o.size.y() <= 0) {
            fail(obstacle_label(i) + " must have a positive size");
            obstacles_ok = false;
            continue;
        }
        for (const Vec2& c : o.shape().corners()) {
            if (!loose.contains(c)) {
                fail(obstacle_label(i) + " extends outside environment");
                break;
            }
        }
    }

    bool spawns_ok = true;
    for (std::size_t i = 0; i < config.spawn_areas.size(); ++i) {
        const SpawnArea& s = config.spawn_areas[i];
        if (!finite(s.rect.min) || !finite(s.rect.size) || s.rect.size.x() <= 0 || s.rect.size.y() <= 0) {
            fail(spawn_label(i) + " must have a positive size");
            spawns_ok = false;
            continue;
        }
        if (s.rect.size.x() < 2 * params.agent_radius || s.rect.size.y() < 2 * params.agent_radius) {
            fail(spawn_label(i) + " is smaller than one agent footprint");
            spawns_ok = false;
        }
        if (!loose.contains(s.rect)) {
            fail(spawn_label(i) + " outside environment");
            spawns_ok = false;
        }
        if (s.agent_count < 1) fail(spawn_label(i) + " needs at least one agent");
        if (!config.find_goal(s.goal_id)) {
            fail(spawn_label(i) + " references missing goal '" + s.goal_id + "'");
            spawns_ok = false;
        }
        for (std::size_t k = 0; k < config.obstacles.size() && obstacles_ok; ++k) {
            if (intersects(to_oriented(s.rect), config.obstacles[k].shape())) {
                fail(spawn_label(i) + ": spawn intersects obstacle " + std::to_string(k));
                spawns_ok = false;
            }
        }
    }

    // Reachability is only meaningful once the geometry is sound.
    if (!spawns_ok || !obstacles_ok || !report.ok()) return report;
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("invalid simulation parameters: ") + e.what());
        return report;
    }
    const NavGrid grid = build_nav_grid(config, params);
    for (std::size_t i = 0; i < config.spawn_areas.size(); ++i) {
        const SpawnArea& s = config.spawn_areas[i];
        const Goal& goal = *config.find_goal(s.goal_id);
        const auto target = goal_target(grid, goal);
        const auto start = grid.nearest_free(s.rect.center(), 0.5 * s.rect.size.norm());
        bool reachable = target && start;
        if (reachable) {
            try {
                plan_path(grid, grid.center_of(*start), *target);
            } catch (const NoPathError&) {
                reachable = false;
            }
        }
        if (!reachable) fail(spawn_label(i) + ": goal unreachable ('" + goal.id + "')");
    }
    return report;
}

ComparabilityResult check_comparability(const std::vector<Configuration>& configs) {
    if (configs.size() < 2) throw std::invalid_argument("nothing to compare");

    ComparabilityResult result;
    const Configuration& first = configs.front();
    result.criteria.agent_total = std::all_of(configs.begin(), configs.end(),
        [&](const Configuration& c) { return c.total_agents() == first.total_agents(); });
    result.criteria.goal_count = std::all_of(configs.begin(), configs.end(),
        [&](const Configuration& c) { return c.goals.size() == first.goals.size(); });
    result.criteria.surface_area = std::all_of(configs.begin(), configs.end(),
        [&](const Configuration& c) { return c.environment == first.environment; });

    auto describe = [&](const char* what, auto value_of) {
        std::ostringstream out;
        out << what << " differ:";
        for (const Configuration& c : configs) out << ' ' << c.id << '=' << value_of(c);
        result.details.push_back(out.str());
    };
    if (!result.criteria.agent_total) describe("agent totals", [](const Configuration& c) { return std::to_string(c.total_agents()); });
    if (!result.criteria.goal_count) describe("goal counts", [](const Configuration& c) { return std::to_string(c.goals.size()); });
    if (!result.criteria.surface_area) {
        describe("environment rectangles", [](const Configuration& c) {
            std::ostringstream s;
            s << c.environment.width << 'x' << c.environment.height;
            return s.str();
        });
    }
    result.comparable = result.criteria.agent_total && result.criteria.goal_count && result.criteria.surface_area;
    return result;
}

ReferenceAgentSpec select_reference_agent(const Configuration& config, const SimParams& params) {
    if (const ValidationReport report = validate_configuration(config, params); !report.ok()) {
        throw std::invalid_argument("invalid configuration '" + config.id + "': " + report.violations.front());
    }
    SimParams seeded = params;
    seeded.seed = 0;
    const std::vector<AgentState> candidates = spawn_agents(config, seeded);

    ReferenceAgentSpec best;
    best.configuration_id = config.id;
    best.distance_to_goal = -1.0;
    // Candidates come ordered by (spawn area, agent index); strict > keeps the first on ties.
    for (const AgentState& a : candidates) {
        const double d = (a.position - config.find_goal(a.goal_id)->center).norm();
        if (d > best.distance_to_goal) {
            best.spawn_position = a.position;
            best.goal_id = a.goal_id;
            best.distance_to_goal = d;
            best.spawn_area = a.spawn_area;
        }
    }
    return best;
}

Configuration deep_copy_configuration(const Configuration& config, std::string new_id) {
    Configuration copy = config;
    copy.id = std::move(new_id);
    return copy;
}

}  // namespace crowdeval
