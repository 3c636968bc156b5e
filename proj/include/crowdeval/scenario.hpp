#pragma once

#include "crowdeval/geometry.hpp"
#include "crowdeval/sim_params.hpp"

#include <string>
#include <vector>

namespace crowdeval {

/// Axis-aligned environment rectangle with its origin at (0, 0).
struct Environment {
    double width = 0.0;
    double height = 0.0;

    double hypotenuse() const { return std::hypot(width, height); }
    Rect bounds() const { return {Vec2::Zero(), Vec2(width, height)}; }
    bool operator==(const Environment&) const = default;
};

struct SpawnArea {
    Rect rect;
    int agent_count = 0;
    std::string goal_id;
};

/// An exit. Agents arrive when their center enters the disc.
struct Goal {
    std::string id;
    Vec2 center = Vec2::Zero();
    double radius = 0.0;
};

struct Obstacle {
    Vec2 center = Vec2::Zero();
    Vec2 size = Vec2::Zero();
    double rotation = 0.0;

    OrientedRect shape() const { return {center, 0.5 * size, rotation}; }
};

struct Configuration {
    std::string id;
    Environment environment;
    std::vector<SpawnArea> spawn_areas;
    std::vector<Goal> goals;
    std::vector<Obstacle> obstacles;

    int total_agents() const;
    /// nullptr when no goal has this id.
    const Goal* find_goal(const std::string& goal_id) const;
};

struct Scenario {
    std::string name;
    std::vector<Configuration> configurations;
};

/// Configurations the editor and CLI accept per scenario.
inline constexpr std::size_t kMaxConfigurations = 4;

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Collects every violated invariant, including reachability of each spawn area's goal on the
/// navigation grid built with `params`. Never throws.
ValidationReport validate_configuration(const Configuration& config, const SimParams& params = {});

struct ComparabilityCriteria {
    bool agent_total = false;
    bool goal_count = false;
    bool surface_area = false;
};

struct ComparabilityResult {
    bool comparable = false;
    ComparabilityCriteria criteria;
    std::vector<std::string> details;
};

/// Configurations are comparable when they share the agent total, the goal count and the exact
/// environment rectangle. Throws std::invalid_argument ("nothing to compare") for fewer than two.
ComparabilityResult check_comparability(const std::vector<Configuration>& configs);

/// Agent chosen to normalize a configuration: the seed-0 spawn position furthest (straight
/// line) from its goal's center.
struct ReferenceAgentSpec {
    std::string configuration_id;
    Vec2 spawn_position = Vec2::Zero();
    std::string goal_id;
    double distance_to_goal = 0.0;
    int spawn_area = 0;
};

/// Throws std::invalid_argument when the configuration is invalid. Only the agent radius of
/// `params` matters; the seed is forced to 0.
ReferenceAgentSpec select_reference_agent(const Configuration& config, const SimParams& params = {});

Configuration deep_copy_configuration(const Configuration& config, std::string new_id);

}  // namespace crowdeval
