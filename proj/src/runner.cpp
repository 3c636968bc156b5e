#include "crowdeval/runner.hpp"

#include "crowdeval/evaluation.hpp"
#include "crowdeval/metrics.hpp"
#include "crowdeval/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace crowdeval {

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out = "simulation incomplete:";
    for (const std::string& p : parts) out += " " + p + ";";
    return out;
}

struct TaskResult {
    RunRecord record;
    bool completed = false;
    std::size_t remaining = 0;
    std::exception_ptr error;
};

}  // namespace

IncompleteRunError::IncompleteRunError(std::vector<std::string> details)
    : std::runtime_error(join(details)), details_(std::move(details)) {}

ComparabilityResult scenario_comparability(const Scenario& scenario) {
    if (scenario.configurations.size() >= 2) return check_comparability(scenario.configurations);
    ComparabilityResult single;
    single.comparable = true;
    single.criteria = {true, true, true};
    single.details.push_back("single configuration");
    return single;
}

ResultsBundle run_scenario(const Scenario& scenario, const RunOptions& options) {
    if (options.runs < 1) throw std::invalid_argument("runs must be at least 1");
    options.params.validate();

    ResultsBundle bundle;
    bundle.scenario = scenario.name;
    bundle.comparability = scenario_comparability(scenario);
    bundle.comparable = bundle.comparability.comparable;
    bundle.runs = options.runs;
    bundle.seed = options.seed;

    const std::size_t n_configs = scenario.configurations.size();
    const std::size_t n_runs = static_cast<std::size_t>(options.runs);
    const std::size_t n_tasks = n_configs * n_runs;
    std::vector<TaskResult> results(n_tasks);
    bundle.configurations.resize(n_configs);

    std::mutex mutex;
    std::vector<std::size_t> runs_done(n_configs, 0);
    int configs_done = 0;

    auto execute = [&](std::size_t task) {
        const std::size_t ci = task / n_runs;
        const std::size_t run = task % n_runs;
        const Configuration& config = scenario.configurations[ci];
        TaskResult& out = results[task];
        try {
            SimParams params = options.params;
            params.seed = options.seed + run;
            const SimulationTrace trace = run_simulation(config, params);
            out.completed = trace.completed;
            out.remaining = static_cast<std::size_t>(trace.agent_count) - trace.per_agent.size();
            if (trace.completed) {
                RunRecord& rec = out.record;
                rec.run = static_cast<int>(run);
                rec.seed = params.seed;
                rec.metrics = compute_metrics(trace);
                rec.reference = run_reference_simulation(config, params);
                rec.primes = prime_values(rec.metrics, rec.reference, config.environment);
                if (bundle.comparable) {
                    rec.phi = phi(rec.primes);
                    rec.xi = xi(rec.primes);
                }
                if (run == 0) {
                    ConfigurationResult& cr = bundle.configurations[ci];
                    cr.occupancy = occupancy_map(trace, config.environment);
                    cr.trajectories = trajectories(trace);
                    std::ostringstream summary;
                    write_agent_summary_csv(summary, trace);
                    cr.agent_summary_csv = summary.str();
                }
            }
        } catch (...) {
            out.error = std::current_exception();
        }
        std::lock_guard lock(mutex);
        if (++runs_done[ci] == n_runs) {
            ++configs_done;
            if (options.on_configuration_done) options.on_configuration_done(configs_done, static_cast<int>(n_configs));
        }
    };

    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_tasks));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) execute(t);
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::vector<std::string> incomplete;
    for (std::size_t task = 0; task < n_tasks; ++task) {
        if (results[task].error) std::rethrow_exception(results[task].error);
        if (!results[task].completed) {
            incomplete.push_back("configuration '" + scenario.configurations[task / n_runs].id + "' run " +
                                 std::to_string(task % n_runs) + ": " + std::to_string(results[task].remaining) +
                                 " agents still active at max_sim_time");
        }
    }
    if (!incomplete.empty()) throw IncompleteRunError(std::move(incomplete));

    for (std::size_t ci = 0; ci < n_configs; ++ci) {
        ConfigurationResult& cr = bundle.configurations[ci];
        cr.id = scenario.configurations[ci].id;
        cr.environment = scenario.configurations[ci].environment;
        for (std::size_t run = 0; run < n_runs; ++run) cr.records.push_back(results[ci * n_runs + run].record);
        cr.aggregate = aggregate_runs(cr.id, cr.records);
    }

    if (bundle.comparable) {
        std::vector<RunAggregate> aggregates;
        for (const ConfigurationResult& cr : bundle.configurations) aggregates.push_back(cr.aggregate);
        bundle.ranking = Ranking{rank_configurations(aggregates, RankMetric::Phi, true),
                                 rank_configurations(aggregates, RankMetric::Xi, true)};
    }
    return bundle;
}

}  // namespace crowdeval
