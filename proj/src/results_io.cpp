#include "crowdeval/results_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace crowdeval {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

double round6(double v) {
    const double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;  // drop negative zero
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", round6(v));
    return buf;
}

// Cursor over the scenario document that knows where it is.
class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& message) const { throw ScenarioParseError(path_, message); }

    void expect_object(std::initializer_list<const char*> allowed) const {
        if (!value_.is_object()) fail("expected an object");
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [key, v] : value_.items()) {
            if (!keys.count(key)) Node(v, child_path(key)).fail("unknown field");
        }
    }

    Node at(const char* key) const {
        const auto it = value_.find(key);
        if (it == value_.end()) Node(value_, child_path(key)).fail("missing field");
        return {*it, child_path(key)};
    }

    std::vector<Node> elements() const {
        if (!value_.is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < value_.size(); ++i) out.emplace_back(value_[i], path_ + "[" + std::to_string(i) + "]");
        return out;
    }

    double number() const {
        if (!value_.is_number()) fail("expected a number");
        const double v = value_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    double positive_length() const {
        const double v = number();
        if (v <= 0) fail("length must be positive (meters)");
        return v;
    }

    int positive_count() const {
        if (!value_.is_number_integer()) fail("expected an integer");
        const auto v = value_.get<long long>();
        if (v < 1) fail("count must be at least 1");
        if (v > 1'000'000) fail("count is unreasonably large");
        return static_cast<int>(v);
    }

    std::string text() const {
        if (!value_.is_string()) fail("expected a string");
        return value_.get<std::string>();
    }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& value_;
    std::string path_;
};

Vec2 parse_point(const Node& n) {
    n.expect_object({"x", "y"});
    return {n.at("x").number(), n.at("y").number()};
}

Configuration parse_configuration(const Node& n) {
    n.expect_object({"id", "environment", "spawn_areas", "goals", "obstacles"});
    Configuration c;
    c.id = n.at("id").text();
    if (c.id.empty()) n.at("id").fail("id must not be empty");

    const Node env = n.at("environment");
    env.expect_object({"width", "height"});
    c.environment.width = env.at("width").positive_length();
    c.environment.height = env.at("height").positive_length();

    for (const Node& g : n.at("goals").elements()) {
        g.expect_object({"id", "center", "radius"});
        Goal goal;
        goal.id = g.at("id").text();
        goal.center = parse_point(g.at("center"));
        goal.radius = g.at("radius").positive_length();
        if (c.find_goal(goal.id)) g.at("id").fail("duplicate goal id '" + goal.id + "'");
        c.goals.push_back(std::move(goal));
    }

    for (const Node& s : n.at("spawn_areas").elements()) {
        s.expect_object({"rect", "agent_count", "goal_id"});
        SpawnArea area;
        const Node rect = s.at("rect");
        rect.expect_object({"x", "y", "w", "h"});
        area.rect.min = Vec2(rect.at("x").number(), rect.at("y").number());
        area.rect.size = Vec2(rect.at("w").positive_length(), rect.at("h").positive_length());
        area.agent_count = s.at("agent_count").positive_count();
        area.goal_id = s.at("goal_id").text();
        if (!c.find_goal(area.goal_id)) s.at("goal_id").fail("spawn area references unknown goal '" + area.goal_id + "'");
        c.spawn_areas.push_back(std::move(area));
    }

    for (const Node& o : n.at("obstacles").elements()) {
        o.expect_object({"center", "size", "rotation"});
        Obstacle obstacle;
        obstacle.center = parse_point(o.at("center"));
        const Node size = o.at("size");
        size.expect_object({"w", "h"});
        obstacle.size = Vec2(size.at("w").positive_length(), size.at("h").positive_length());
        obstacle.rotation = o.at("rotation").number();
        c.obstacles.push_back(obstacle);
    }
    return c;
}

ordered_json point_json(const Vec2& p) { return {{"x", round6(p.x())}, {"y", round6(p.y())}}; }

}  // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError("", std::string("malformed JSON: ") + e.what());
    }
    const Node root(doc, "");
    root.expect_object({"name", "configurations"});
    Scenario scenario;
    scenario.name = root.at("name").text();
    std::set<std::string> ids;
    const std::vector<Node> configs = root.at("configurations").elements();
    if (configs.empty()) root.at("configurations").fail("at least one configuration is required");
    for (const Node& c : configs) {
        Configuration config = parse_configuration(c);
        if (!ids.insert(config.id).second) c.at("id").fail("duplicate configuration id '" + config.id + "'");
        scenario.configurations.push_back(std::move(config));
    }
    return scenario;
}

Scenario load_scenario(std::string_view text, const SimParams& params) {
    Scenario scenario = parse_scenario(text);
    for (std::size_t i = 0; i < scenario.configurations.size(); ++i) {
        const ValidationReport report = validate_configuration(scenario.configurations[i], params);
        if (!report.ok()) {
            std::string message = "invalid configuration '" + scenario.configurations[i].id + "':";
            for (const std::string& v : report.violations) message += " " + v + ";";
            throw ScenarioParseError("configurations[" + std::to_string(i) + "]", message);
        }
    }
    return scenario;
}

Scenario load_scenario_file(const std::filesystem::path& file, const SimParams& params) {
    return load_scenario(read_file(file), params);
}

std::string save_scenario(const Scenario& scenario) {
    ordered_json configs = ordered_json::array();
    for (const Configuration& c : scenario.configurations) {
        ordered_json spawns = ordered_json::array();
        for (const SpawnArea& s : c.spawn_areas) {
            spawns.push_back({{"rect", {{"x", round6(s.rect.min.x())}, {"y", round6(s.rect.min.y())},
                                        {"w", round6(s.rect.size.x())}, {"h", round6(s.rect.size.y())}}},
                              {"agent_count", s.agent_count},
                              {"goal_id", s.goal_id}});
        }
        ordered_json goals = ordered_json::array();
        for (const Goal& g : c.goals) {
            goals.push_back({{"id", g.id}, {"center", point_json(g.center)}, {"radius", round6(g.radius)}});
        }
        ordered_json obstacles = ordered_json::array();
        for (const Obstacle& o : c.obstacles) {
            obstacles.push_back({{"center", point_json(o.center)},
                                 {"size", {{"w", round6(o.size.x())}, {"h", round6(o.size.y())}}},
                                 {"rotation", round6(o.rotation)}});
        }
        configs.push_back({{"id", c.id},
                           {"environment", {{"width", round6(c.environment.width)}, {"height", round6(c.environment.height)}}},
                           {"spawn_areas", spawns},
                           {"goals", goals},
                           {"obstacles", obstacles}});
    }
    const ordered_json doc{{"name", scenario.name}, {"configurations", configs}};
    return doc.dump(2) + "\n";
}

ArtifactPaths artifact_paths(const std::string& id) {
    return {id + "/occupancy.txt", id + "/occupancy.pgm", id + "/trajectories.csv", id + "/agents.csv"};
}

namespace {

bool withheld(const std::string& key, bool comparable) { return !comparable && (key == "phi" || key == "xi"); }

ordered_json aggregate_json(const RunAggregate& agg, bool comparable) {
    ordered_json out = ordered_json::object();
    std::vector<std::string> keys = metric_keys();
    for (const auto* group : {&reference_keys(), &prime_keys()}) keys.insert(keys.end(), group->begin(), group->end());
    keys.insert(keys.end(), {"phi", "xi"});
    for (const std::string& key : keys) {
        if (!agg.has(key) || withheld(key, comparable)) continue;
        const Stat& s = agg.at(key);
        out[key] = {{"mean", round6(s.mean)}, {"std", round6(s.std)}};
    }
    return out;
}

}  // namespace

std::string manifest_json(const ResultsBundle& bundle) {
    ordered_json configs = ordered_json::array();
    for (const ConfigurationResult& c : bundle.configurations) {
        ordered_json records = ordered_json::array();
        for (const RunRecord& r : c.records) {
            ordered_json rec{{"run", r.run}, {"seed", r.seed}};
            for (const auto& [key, value] : record_values(r)) {
                if (!withheld(key, bundle.comparable)) rec[key] = round6(value);
            }
            records.push_back(std::move(rec));
        }
        const ArtifactPaths files = artifact_paths(c.id);
        configs.push_back({{"id", c.id},
                           {"environment", {{"width", round6(c.environment.width)}, {"height", round6(c.environment.height)}}},
                           {"aggregate", aggregate_json(c.aggregate, bundle.comparable)},
                           {"records", records},
                           {"files", {{"occupancy_txt", files.occupancy_txt},
                                      {"occupancy_pgm", files.occupancy_pgm},
                                      {"trajectories", files.trajectories},
                                      {"agents", files.agents}}}});
    }
    const ComparabilityResult& cmp = bundle.comparability;
    ordered_json doc{{"scenario", bundle.scenario},
                     {"comparable", bundle.comparable},
                     {"runs", bundle.runs},
                     {"seed", bundle.seed},
                     {"comparability", {{"agent_total", cmp.criteria.agent_total},
                                        {"goal_count", cmp.criteria.goal_count},
                                        {"surface_area", cmp.criteria.surface_area},
                                        {"details", cmp.details}}},
                     {"configurations", configs}};
    if (bundle.comparable && bundle.ranking) {
        auto ids = [](const std::vector<RankEntry>& entries) {
            ordered_json out = ordered_json::array();
            for (const RankEntry& e : entries) out.push_back(e.config_id);
            return out;
        };
        doc["ranking"] = {{"phi", ids(bundle.ranking->phi)}, {"xi", ids(bundle.ranking->xi)}};
    }
    return doc.dump(2) + "\n";
}

std::string metrics_csv(const ResultsBundle& bundle) {
    std::ostringstream out;
    out << "config_id,run,t_g,t_bar,d_bar,s_bar,w_bar\n";
    for (const ConfigurationResult& c : bundle.configurations) {
        for (const RunRecord& r : c.records) {
            const MetricsBundle& m = r.metrics;
            out << c.id << ',' << r.run << ',' << fixed6(m.t_g) << ',' << fixed6(m.t_bar) << ',' << fixed6(m.d_bar) << ','
                << fixed6(m.s_bar) << ',' << fixed6(m.w_bar) << '\n';
        }
    }
    return out.str();
}

std::string comparison_csv(const ResultsBundle& bundle) {
    const bool scored = bundle.comparable && bundle.ranking.has_value();
    auto rank_of = [](const std::vector<RankEntry>& ranking, const std::string& id) {
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            if (ranking[i].config_id == id) return static_cast<int>(i + 1);
        }
        return 0;
    };
    std::ostringstream out;
    out << "config_id,t_g_prime,t_bar_prime,d_bar,s_bar_prime,w_bar_prime";
    if (scored) out << ",phi,xi,phi_rank,xi_rank";
    out << '\n';
    for (const ConfigurationResult& c : bundle.configurations) {
        const RunAggregate& a = c.aggregate;
        out << c.id << ',' << fixed6(a.at("t_g_prime").mean) << ',' << fixed6(a.at("t_bar_prime").mean) << ','
            << fixed6(a.at("d_bar").mean) << ',' << fixed6(a.at("s_bar_prime").mean) << ',' << fixed6(a.at("w_bar_prime").mean);
        if (scored) {
            out << ',' << fixed6(a.at("phi").mean) << ',' << fixed6(a.at("xi").mean) << ',' << rank_of(bundle.ranking->phi, c.id)
                << ',' << rank_of(bundle.ranking->xi, c.id);
        }
        out << '\n';
    }
    return out.str();
}

std::string occupancy_text(const OccupancyGrid& grid) {
    std::ostringstream out;
    write_occupancy_text(out, grid);
    return out.str();
}

std::string occupancy_pgm(const OccupancyGrid& grid) {
    std::ostringstream out;
    write_occupancy_pgm(out, grid);
    return out.str();
}

std::string trajectories_csv(const TrajectorySet& set) {
    std::ostringstream out;
    write_trajectories_csv(out, set);
    return out.str();
}

void save_results(const ResultsBundle& bundle, const std::filesystem::path& dir) {
    write_file(dir / "manifest.json", manifest_json(bundle));
    write_file(dir / "metrics.csv", metrics_csv(bundle));
    write_file(dir / "comparison.csv", comparison_csv(bundle));
    for (const ConfigurationResult& c : bundle.configurations) {
        const ArtifactPaths files = artifact_paths(c.id);
        write_file(dir / files.occupancy_txt, occupancy_text(c.occupancy));
        write_file(dir / files.occupancy_pgm, occupancy_pgm(c.occupancy));
        write_file(dir / files.trajectories, trajectories_csv(c.trajectories));
        write_file(dir / files.agents, c.agent_summary_csv);
    }
}

ManifestSummary parse_manifest(std::string_view text) {
    ManifestSummary summary;
    try {
        const json doc = json::parse(text);
        summary.scenario = doc.at("scenario").get<std::string>();
        summary.comparable = doc.at("comparable").get<bool>();
        summary.runs = doc.at("runs").get<int>();
        if (const auto it = doc.find("comparability"); it != doc.end()) {
            summary.details = it->at("details").get<std::vector<std::string>>();
        }
        for (const json& c : doc.at("configurations")) {
            RunAggregate agg;
            agg.config_id = c.at("id").get<std::string>();
            agg.runs = summary.runs;
            for (const auto& [key, stat] : c.at("aggregate").items()) {
                agg.stats.emplace(key, Stat{stat.at("mean").get<double>(), stat.at("std").get<double>()});
            }
            summary.aggregates.push_back(std::move(agg));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed manifest: ") + e.what());
    }
    return summary;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& file, std::string_view contents) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

}  // namespace crowdeval
