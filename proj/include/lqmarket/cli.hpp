#pragma once

#include <string>
#include <vector>

namespace lqmarket {

/// Exit codes shared by the CLI and the in-process runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitSolverError = 3,
  kExitVerifyError = 4,
};

/// Runs one CLI invocation in-process; args excludes the program name
/// (e.g. {"clear", "--config", "s.json", "--out", "o.csv"}).
int run_command(const std::vector<std::string>& args);

}  // namespace lqmarket
