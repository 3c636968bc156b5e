#include "crowdeval/cli.hpp"

#include "crowdeval/runner.hpp"
#include "crowdeval/service.hpp"

#include <CLI11.hpp>

#include <pthread.h>
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <optional>
#include <thread>

namespace crowdeval {

namespace {

std::string cell(const RunAggregate& agg, const std::string& key, int width) {
    char buf[64];
    if (!agg.has(key)) {
        std::snprintf(buf, sizeof buf, "%*s", width, "-");
    } else {
        const Stat& s = agg.at(key);
        char inner[48];
        std::snprintf(inner, sizeof inner, "%.2f (±%.2f)", s.mean, s.std);
        // the plus-minus sign is two bytes but one column
        std::snprintf(buf, sizeof buf, "%*s", width + 1, inner);
    }
    return buf;
}

void print_row(std::ostream& out, const std::string& id, const RunAggregate& agg, const std::vector<std::string>& keys,
               std::size_t split) {
    char head[32];
    std::snprintf(head, sizeof head, "%-6s", id.c_str());
    out << head;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i == split) out << " |";
        out << cell(agg, keys[i], 16);
    }
    out << '\n';
}

void print_header(std::ostream& out, const std::vector<std::string>& labels, std::size_t split) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-6s", "ID");
    out << buf;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i == split) out << " |";
        std::snprintf(buf, sizeof buf, "%16s", labels[i].c_str());
        out << buf;
    }
    out << '\n';
}

void print_ranking(std::ostream& out, const std::vector<RankEntry>& ranking, RankMetric metric) {
    std::string tag = to_string(metric);
    std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::toupper(c); });
    out << '[' << tag << "] best: " << ranking.front().config_id << '\n';
    out << to_string(metric) << " ranking:";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s %s (%.4f)", i ? " <" : "", ranking[i].config_id.c_str(), ranking[i].mean);
        out << buf;
    }
    out << '\n';
}

void print_tables(std::ostream& out, const std::vector<RunAggregate>& aggregates, bool comparable,
                  const std::vector<std::string>& details) {
    const bool has_reference = std::any_of(aggregates.begin(), aggregates.end(), [](const RunAggregate& a) {
        return a.has("t_ar");
    });
    if (has_reference) {
        out << "\nreference and final simulation\n";
        std::vector<std::string> keys = reference_keys();
        keys.insert(keys.end(), metric_keys().begin(), metric_keys().end());
        print_header(out, keys, reference_keys().size());
        for (const RunAggregate& a : aggregates) print_row(out, a.config_id, a, keys, reference_keys().size());
    }

    out << "\nprime values" << (comparable ? " and evaluation metrics" : "") << '\n';
    std::vector<std::string> keys{"t_g_prime", "t_bar_prime", "s_bar_prime", "w_bar_prime", "d_bar"};
    std::vector<std::string> labels{"t'_g", "t'_bar", "s'_bar", "w'_bar", "d_bar"};
    if (comparable) {
        keys.insert(keys.end(), {"phi", "xi"});
        labels.insert(labels.end(), {"phi", "xi"});
    }
    print_header(out, labels, 5);
    for (const RunAggregate& a : aggregates) print_row(out, a.config_id, a, keys, 5);
    out << '\n';

    if (comparable) {
        for (RankMetric m : {RankMetric::Phi, RankMetric::Xi}) {
            print_ranking(out, rank_configurations(aggregates, m, true), m);
        }
    } else {
        out << "not comparable; phi and xi withheld\n";
        for (const std::string& d : details) out << "  " << d << '\n';
    }
}

// Structural parse, the configuration cap, and per-configuration validation. Empty on success.
std::vector<std::string> check_scenario_file(const std::string& file, const SimParams& params,
                                             std::optional<Scenario>& scenario) {
    std::vector<std::string> problems;
    try {
        scenario = parse_scenario(read_file(file));
    } catch (const std::exception& e) {
        problems.push_back(e.what());
        return problems;
    }
    if (scenario->configurations.size() > kMaxConfigurations) {
        problems.push_back("at most " + std::to_string(kMaxConfigurations) + " configurations are supported, found " +
                           std::to_string(scenario->configurations.size()));
    }
    for (const Configuration& c : scenario->configurations) {
        for (const std::string& v : validate_configuration(c, params).violations) {
            problems.push_back("configuration '" + c.id + "': " + v);
        }
    }
    return problems;
}

int serve(const ServiceConfig& config, std::ostream& out) {
    // Signals are taken synchronously by a dedicated thread; every other thread inherits the mask.
    sigset_t signals, previous;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, &previous);

    int code = kExitOk;
    {
        Service service(config);
        const int port = service.bind();
        std::thread watcher([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            service.stop();
        });
        out << "listening on " << config.host << ':' << port << '\n';
        out << "ready" << std::endl;
        service.listen();
        service.stop();
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
    }
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    return code;
}

}  // namespace

void print_summary(std::ostream& out, const ResultsBundle& bundle) {
    out << "scenario " << bundle.scenario << ": " << bundle.configurations.size() << " configuration"
        << (bundle.configurations.size() == 1 ? "" : "s") << ", " << bundle.runs << " run"
        << (bundle.runs == 1 ? "" : "s") << ", seeds " << bundle.seed << ".." << bundle.seed + bundle.runs - 1 << '\n';
    out << "comparable: " << (bundle.comparable ? "yes" : "no") << '\n';
    std::vector<RunAggregate> aggregates;
    for (const ConfigurationResult& c : bundle.configurations) aggregates.push_back(c.aggregate);
    print_tables(out, aggregates, bundle.comparable, bundle.comparability.details);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Crowd configuration simulator and evacuation scoring"};
    app.require_subcommand(1);

    std::string scenario_file, results_dir, out_dir = "results";
    RunOptions options;
    std::optional<double> timestep, speed, nav_cell, max_time;
    unsigned workers = 0;
    auto* run = app.add_subcommand("run", "simulate every configuration and write a results directory");
    run->add_option("scenario", scenario_file, "scenario JSON file")->required();
    run->add_option("--runs", options.runs, "executions per configuration")->check(CLI::Range(1, 1000));
    run->add_option("--seed", options.seed, "seed of the first run; run k uses seed + k");
    run->add_option("--out", out_dir, "results directory");
    run->add_option("--timestep", timestep, "simulation timestep in seconds")->check(CLI::PositiveNumber);
    run->add_option("--speed", speed, "preferred walking speed in m/s")->check(CLI::PositiveNumber);
    run->add_option("--nav-cell", nav_cell, "navigation grid cell size in meters")->check(CLI::PositiveNumber);
    run->add_option("--max-time", max_time, "simulated time limit in seconds")->check(CLI::PositiveNumber);
    run->add_option("--workers", workers, "worker threads, 0 for one per core");

    auto* compare = app.add_subcommand("compare", "rank configurations recorded in a results directory");
    compare->add_option("results", results_dir, "results directory")->required();

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_file, "scenario JSON file")->required();
    validate->add_option("--nav-cell", nav_cell, "navigation grid cell size in meters")->check(CLI::PositiveNumber);

    std::optional<int> port;
    std::string host = "0.0.0.0";
    auto* serve_cmd = app.add_subcommand("serve", "start the HTTP simulation service");
    serve_cmd->add_option("--port", port, "port, 0 for any free port; default $PORT or 8080")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host, "listen address");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    SimParams& params = options.params;
    if (timestep) params.timestep = *timestep;
    if (speed) {
        params.preferred_speed = *speed;
        params.max_speed = std::max(params.max_speed, *speed);
    }
    if (nav_cell) params.nav_cell = *nav_cell;
    if (max_time) params.max_sim_time = *max_time;
    options.workers = workers;

    try {
        if (*validate) {
            std::optional<Scenario> scenario;
            const std::vector<std::string> problems = check_scenario_file(scenario_file, params, scenario);
            if (!problems.empty()) {
                for (const std::string& p : problems) err << "error: " << p << '\n';
                return kExitInvalid;
            }
            const ComparabilityResult cmp = scenario_comparability(*scenario);
            const std::size_t n = scenario->configurations.size();
            out << "OK, " << n << " configuration" << (n == 1 ? "" : "s") << ", "
                << (cmp.comparable ? "comparable" : "not comparable") << '\n';
            if (!cmp.comparable) {
                for (const std::string& d : cmp.details) out << "  " << d << '\n';
            }
            return kExitOk;
        }

        if (*run) {
            params.validate();
            std::optional<Scenario> scenario;
            const std::vector<std::string> problems = check_scenario_file(scenario_file, params, scenario);
            if (!problems.empty()) {
                for (const std::string& p : problems) err << "error: " << p << '\n';
                return kExitInvalid;
            }
            ResultsBundle bundle;
            try {
                bundle = run_scenario(*scenario, options);
            } catch (const IncompleteRunError& e) {
                err << "error: simulation incomplete\n";
                for (const std::string& d : e.details()) err << "  " << d << '\n';
                return kExitIncomplete;
            }
            save_results(bundle, out_dir);
            print_summary(out, bundle);
            out << "\nresults written to " << out_dir << '\n';
            return kExitOk;
        }

        if (*compare) {
            const ManifestSummary summary = parse_manifest(read_file(std::filesystem::path(results_dir) / "manifest.json"));
            out << "scenario " << summary.scenario << ": " << summary.aggregates.size() << " configurations, "
                << summary.runs << " runs\n";
            out << "comparable: " << (summary.comparable ? "yes" : "no") << '\n';
            print_tables(out, summary.aggregates, summary.comparable, summary.details);
            return kExitOk;
        }

        if (*serve_cmd) {
            ServiceConfig config = service_config_from_env();
            config.host = host;
            if (port) config.port = *port;
            return serve(config, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace crowdeval
