#pragma once

#include <cstdint>

namespace crowdeval {

/// Global simulation parameters. Every agent shares speed and radius.
struct SimParams {
    double timestep = 0.1;         // s
    double preferred_speed = 1.15; // m/s
    double max_speed = 1.3;        // m/s
    double agent_radius = 0.3;     // m
    double goal_reach_tolerance = 0.0;  // m, added to the goal radius
    double max_sim_time = 600.0;   // s
    double nav_cell = 0.5;         // m
    double repulsion_gain = 1.5;   // m^2/s
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

}  // namespace crowdeval
