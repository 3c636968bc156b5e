#include "crowdeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace crowdeval {

namespace {

void require_complete(const SimulationTrace& trace) {
    if (!trace.completed || trace.per_agent.empty()) throw IncompleteTraceError();
}

template <typename Field>
double mean_over_agents(const SimulationTrace& trace, Field field) {
    require_complete(trace);
    double sum = 0.0;
    for (const auto& [id, s] : trace.per_agent) sum += field(s);
    return sum / static_cast<double>(trace.per_agent.size());
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

double total_time(const SimulationTrace& trace) {
    require_complete(trace);
    double t = 0.0;
    for (const auto& [id, s] : trace.per_agent) t = std::max(t, s.t_k);
    return t;
}

double average_time(const SimulationTrace& trace) {
    return mean_over_agents(trace, [](const AgentSummary& s) { return s.t_k; });
}

double average_speed(const SimulationTrace& trace) {
    return mean_over_agents(trace, [](const AgentSummary& s) { return s.s_k; });
}

double average_distance(const SimulationTrace& trace) {
    return mean_over_agents(trace, [](const AgentSummary& s) { return s.w_k; });
}

double average_density(const SimulationTrace& trace) {
    double sum = 0.0;
    int frames = 0;
    std::vector<std::pair<long, long>> cells;
    for (const Frame& f : trace.frames) {
        if (f.agents.empty()) continue;
        cells.clear();
        for (const AgentSample& s : f.agents) {
            cells.emplace_back(static_cast<long>(std::floor(s.position.x())), static_cast<long>(std::floor(s.position.y())));
        }
        std::sort(cells.begin(), cells.end());
        const auto occupied = std::distance(cells.begin(), std::unique(cells.begin(), cells.end()));
        sum += static_cast<double>(f.agents.size()) / static_cast<double>(occupied);
        ++frames;
    }
    if (frames == 0) throw std::runtime_error("no frame with active agents");
    return sum / frames;
}

MetricsBundle compute_metrics(const SimulationTrace& trace) {
    MetricsBundle m;
    m.t_g = total_time(trace);
    m.t_bar = average_time(trace);
    m.d_bar = average_density(trace);
    m.s_bar = average_speed(trace);
    m.w_bar = average_distance(trace);
    m.agent_count = trace.agent_count;
    return m;
}

OccupancyGrid occupancy_map(const SimulationTrace& trace, const Environment& environment) {
    const int cols = std::max(1, static_cast<int>(std::ceil(environment.width - 1e-9)));
    const int rows = std::max(1, static_cast<int>(std::ceil(environment.height - 1e-9)));
    OccupancyGrid grid{Eigen::ArrayXXi::Zero(cols, rows)};

    std::set<std::tuple<int, int, int>> visits;  // (agent, col, row)
    for (const Frame& f : trace.frames) {
        for (const AgentSample& s : f.agents) {
            const int c = std::clamp(static_cast<int>(std::floor(s.position.x())), 0, cols - 1);
            const int r = std::clamp(static_cast<int>(std::floor(s.position.y())), 0, rows - 1);
            if (visits.emplace(s.agent_id, c, r).second) ++grid.counts(c, r);
        }
    }
    return grid;
}

void write_occupancy_text(std::ostream& out, const OccupancyGrid& grid) {
    for (int r = grid.rows() - 1; r >= 0; --r) {
        for (int c = 0; c < grid.cols(); ++c) {
            if (c) out << ' ';
            out << grid.at(c, r);
        }
        out << '\n';
    }
}

void write_occupancy_pgm(std::ostream& out, const OccupancyGrid& grid) {
    const int peak = grid.counts.size() ? grid.counts.maxCoeff() : 0;
    out << "P5\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
    for (int r = grid.rows() - 1; r >= 0; --r) {
        for (int c = 0; c < grid.cols(); ++c) {
            const int v = peak > 0 ? static_cast<int>(std::lround(255.0 * grid.at(c, r) / peak)) : 0;
            out.put(static_cast<char>(static_cast<unsigned char>(v)));
        }
    }
}

TrajectorySet trajectories(const SimulationTrace& trace) {
    TrajectorySet set;
    set.goals = trace.goals;
    for (const auto& [id, goal] : trace.agent_goal) set.polylines[id];
    for (const Frame& f : trace.frames) {
        for (const AgentSample& s : f.agents) set.polylines[s.agent_id].push_back(s.position);
    }
    return set;
}

void write_trajectories_csv(std::ostream& out, const TrajectorySet& set) {
    out << "agent_id,point,x,y\n";
    for (const auto& [id, line] : set.polylines) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            out << id << ',' << i << ',' << fixed6(line[i].x()) << ',' << fixed6(line[i].y()) << '\n';
        }
    }
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
    out << "time,agent_id,x,y,speed\n";
    for (const Frame& f : trace.frames) {
        for (const AgentSample& s : f.agents) {
            out << fixed6(f.time) << ',' << s.agent_id << ',' << fixed6(s.position.x()) << ',' << fixed6(s.position.y())
                << ',' << fixed6(s.speed) << '\n';
        }
    }
}

void write_agent_summary_csv(std::ostream& out, const SimulationTrace& trace) {
    out << "agent_id,t_k,w_k,s_k\n";
    for (const auto& [id, s] : trace.per_agent) {
        out << id << ',' << fixed6(s.t_k) << ',' << fixed6(s.w_k) << ',' << fixed6(s.s_k) << '\n';
    }
}

}  // namespace crowdeval
