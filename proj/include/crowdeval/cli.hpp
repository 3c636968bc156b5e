#pragma once

#include "crowdeval/results_io.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace crowdeval {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitIncomplete = 2 };

/// Runs the tool on `args` (without the program name). `serve` blocks until SIGINT/SIGTERM.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-configuration metric tables in the order reference | final, then primes and scores.
void print_summary(std::ostream& out, const ResultsBundle& bundle);

}  // namespace crowdeval
