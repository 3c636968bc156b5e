#pragma once

#include "crowdeval/results_io.hpp"
#include "crowdeval/scenario.hpp"
#include "crowdeval/sim_params.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdeval {

struct RunOptions {
    int runs = 1;
    std::uint64_t seed = 0;  // run k uses seed + k
    SimParams params;
    unsigned workers = 0;  // 0: one per hardware thread
    /// Called once per configuration whose runs have all finished: (finished, total).
    std::function<void(int, int)> on_configuration_done;
};

/// At least one final simulation hit max_sim_time before every agent arrived.
class IncompleteRunError : public std::runtime_error {
public:
    explicit IncompleteRunError(std::vector<std::string> details);
    const std::vector<std::string>& details() const { return details_; }

private:
    std::vector<std::string> details_;
};

/// Comparability verdict used by the runner. A single configuration is trivially comparable.
ComparabilityResult scenario_comparability(const Scenario& scenario);

/// Final and reference simulation for every (configuration, run), then aggregation and, when
/// the configurations are comparable, phi/xi and the rankings.
ResultsBundle run_scenario(const Scenario& scenario, const RunOptions& options);

}  // namespace crowdeval
