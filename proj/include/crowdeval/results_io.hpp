#pragma once

#include "crowdeval/evaluation.hpp"
#include "crowdeval/metrics.hpp"
#include "crowdeval/scenario.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crowdeval {

/// Malformed scenario document. `path` locates the offending node, e.g.
/// "configurations[1].spawn_areas[0].goal_id".
class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Structural parse: types, units, unknown fields, dangling goal references.
Scenario parse_scenario(std::string_view json);

/// parse_scenario plus validate_configuration on every configuration.
Scenario load_scenario(std::string_view json, const SimParams& params = {});
Scenario load_scenario_file(const std::filesystem::path& file, const SimParams& params = {});

/// Stable key order and 6-decimal floats.
std::string save_scenario(const Scenario& scenario);

struct ConfigurationResult {
    std::string id;
    Environment environment;
    RunAggregate aggregate;
    std::vector<RunRecord> records;
    // Artifacts of the first run.
    OccupancyGrid occupancy;
    TrajectorySet trajectories;
    std::string agent_summary_csv;
};

struct Ranking {
    std::vector<RankEntry> phi;
    std::vector<RankEntry> xi;
};

struct ResultsBundle {
    std::string scenario;
    bool comparable = false;
    ComparabilityResult comparability;
    int runs = 0;
    std::uint64_t seed = 0;
    std::vector<ConfigurationResult> configurations;
    std::optional<Ranking> ranking;  // present iff comparable
};

/// Relative artifact paths inside a results directory.
struct ArtifactPaths {
    std::string occupancy_txt;
    std::string occupancy_pgm;
    std::string trajectories;
    std::string agents;
};
ArtifactPaths artifact_paths(const std::string& config_id);

std::string manifest_json(const ResultsBundle& bundle);
std::string metrics_csv(const ResultsBundle& bundle);
std::string comparison_csv(const ResultsBundle& bundle);
std::string occupancy_text(const OccupancyGrid& grid);
std::string occupancy_pgm(const OccupancyGrid& grid);
std::string trajectories_csv(const TrajectorySet& set);

/// Writes manifest.json, metrics.csv, comparison.csv and per-configuration artifacts.
void save_results(const ResultsBundle& bundle, const std::filesystem::path& dir);

/// Aggregates and ranking as recorded in a manifest, without re-simulating.
struct ManifestSummary {
    std::string scenario;
    bool comparable = false;
    int runs = 0;
    std::vector<RunAggregate> aggregates;
    std::vector<std::string> details;
};
ManifestSummary parse_manifest(std::string_view json);

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view contents);

}  // namespace crowdeval
