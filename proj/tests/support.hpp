#pragma once

#include "crowdeval/nav_grid.hpp"
#include "crowdeval/results_io.hpp"
#include "crowdeval/runner.hpp"
#include "crowdeval/scenario.hpp"
#include "crowdeval/simulation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace testing {

using namespace crowdeval;

std::filesystem::path fixture_path(const std::string& name);
Scenario fixture(const std::string& name);
const Configuration& config_of(const Scenario& s, const std::string& id);

/// Fresh directory under the system temp dir, removed at the start of each call with the same tag.
std::filesystem::path scratch_dir(const std::string& tag);

/// Open rectangle with one spawn area and one goal.
Configuration open_config(double width, double height, const Rect& spawn, int agents, const Vec2& goal,
                          double goal_radius = 1.0, std::string id = "A");
Rect rect(double x, double y, double w, double h);

/// Trace whose frames are given explicitly; per_agent and completion are set by the caller.
SimulationTrace synthetic_trace(const Environment& env, const std::vector<std::vector<Vec2>>& frames, double dt = 0.1);

// Independent oracles on a nav grid: 8-connected with the same no-corner-cutting rule.
bool bfs_reachable(const NavGrid& grid, Cell from, Cell to);
std::optional<double> dijkstra_length(const NavGrid& grid, Cell from, Cell to);

/// Every per-frame invariant of a trace. Empty when all hold.
std::vector<std::string> trace_violations(const SimulationTrace& trace, const Configuration& config);

/// Cached 10-run results of a fixture at seed 0, shared across test cases.
const ResultsBundle& cached_results(const std::string& fixture_name, int runs = 10);

}  // namespace testing
