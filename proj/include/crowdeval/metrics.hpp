#pragma once

#include "crowdeval/simulation.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <vector>

namespace crowdeval {

/// Scalar crowd metrics of one completed run.
struct MetricsBundle {
    double t_g = 0.0;    // time for every agent to arrive
    double t_bar = 0.0;  // mean arrival time
    double d_bar = 0.0;  // agents per occupied 1x1 m cell, averaged over frames
    double s_bar = 0.0;  // mean of per-agent mean speeds
    double w_bar = 0.0;  // mean distance walked
    int agent_count = 0;
};

class IncompleteTraceError : public std::runtime_error {
public:
    IncompleteTraceError() : std::runtime_error("evacuation did not complete") {}
};

double total_time(const SimulationTrace& trace);
double average_time(const SimulationTrace& trace);
double average_density(const SimulationTrace& trace);
double average_speed(const SimulationTrace& trace);
double average_distance(const SimulationTrace& trace);

MetricsBundle compute_metrics(const SimulationTrace& trace);

/// Distinct agents that entered each 1x1 m cell. Indexed (column, row); row 0 is y in [0, 1).
struct OccupancyGrid {
    static constexpr double kCellSize = 1.0;
    Eigen::ArrayXXi counts;

    int cols() const { return static_cast<int>(counts.rows()); }
    int rows() const { return static_cast<int>(counts.cols()); }
    int at(int col, int row) const { return counts(col, row); }
};

OccupancyGrid occupancy_map(const SimulationTrace& trace, const Environment& environment);

/// Space separated counts, one grid row per line, top row (largest y) first.
void write_occupancy_text(std::ostream& out, const OccupancyGrid& grid);
/// Binary 8-bit PGM scaled so the busiest cell is 255; top row first.
void write_occupancy_pgm(std::ostream& out, const OccupancyGrid& grid);

struct TrajectorySet {
    std::map<int, std::vector<Vec2>> polylines;
    std::vector<Goal> goals;
};

TrajectorySet trajectories(const SimulationTrace& trace);

/// `agent_id,point,x,y`
void write_trajectories_csv(std::ostream& out, const TrajectorySet& set);
/// `time,agent_id,x,y,speed`
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);
/// `agent_id,t_k,w_k,s_k`
void write_agent_summary_csv(std::ostream& out, const SimulationTrace& trace);

}  // namespace crowdeval
