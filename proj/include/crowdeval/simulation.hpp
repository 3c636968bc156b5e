#pragma once

#include "crowdeval/nav_grid.hpp"
#include "crowdeval/scenario.hpp"
#include "crowdeval/sim_params.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crowdeval {

struct AgentState {
    int id = 0;
    int spawn_area = 0;
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    std::string goal_id;
    Path path;
    std::size_t waypoint = 0;
    bool active = true;
    std::optional<double> finish_time;
    double distance_walked = 0.0;
    double speed = 0.0;      // realised during the last step
    double speed_sum = 0.0;  // over steps taken while active
    int steps_taken = 0;
    double replan_cooldown = 0.0;
};

struct AgentSample {
    int agent_id = 0;
    Vec2 position = Vec2::Zero();
    double speed = 0.0;
};

/// Snapshot of the active agents. Frame 0 holds spawn positions with zero speed; frame k holds
/// positions after k steps and the speed realised during step k.
struct Frame {
    double time = 0.0;
    std::vector<AgentSample> agents;
};

struct AgentSummary {
    double t_k = 0.0;  // finish time
    double w_k = 0.0;  // distance walked
    double s_k = 0.0;  // mean per-frame speed while active
};

struct SimulationTrace {
    SimParams params;
    Environment environment;
    std::vector<Goal> goals;
    std::vector<Frame> frames;
    std::map<int, AgentSummary> per_agent;  // finished agents only
    std::map<int, std::string> agent_goal;
    int agent_count = 0;
    bool completed = false;
};

struct ReferenceResult {
    double t_ar = 0.0;
    double s_ar = 0.0;
    double w_ar = 0.0;
};

/// Static inputs shared by every step of a run.
struct World {
    Configuration config;
    NavGrid grid;
    SimParams params;
    std::map<std::string, Vec2> goal_targets;

    World(Configuration config, const SimParams& params);
};

struct SimState {
    double time = 0.0;
    std::size_t frame = 0;
    std::vector<AgentState> agents;

    std::size_t active_count() const;
};

/// Rejection-sampled spawn positions, deterministic in (params.seed, spawn-area index).
/// Paths are not planned. Throws std::invalid_argument when a spawn rect cannot hold one agent.
std::vector<AgentState> spawn_agents(const Configuration& config, const SimParams& params);

/// Plans the agent's path from its current position to its goal. Throws NoPathError.
void plan_agent(AgentState& agent, const World& world);

/// Advances every active agent by one timestep.
SimState step(SimState state, const World& world);

/// Runs spawned (and planned) agents until all arrive or max_sim_time elapses.
SimulationTrace simulate(const World& world, std::vector<AgentState> agents);

SimulationTrace run_simulation(const Configuration& config, const SimParams& params);

/// Single-agent run for the reference agent. Throws std::runtime_error when it does not finish.
ReferenceResult run_reference_simulation(const Configuration& config, const SimParams& params);

/// FNV-1a over the canonical trace CSV; equal traces hash equal.
std::uint64_t trace_hash(const SimulationTrace& trace);

}  // namespace crowdeval
