#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qfsl {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
  kExitGradcheck = 4,
};

/// Runs the `qfsl` command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qfsl
