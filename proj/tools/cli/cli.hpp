#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aspca::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_other = 1,
  exit_parse = 2,
  exit_infeasible = 3,
  exit_fallback_without_M = 4,
};

// Runs the command line `args` (args[0] is the program name). Reports go to
// files under --out; `out` receives a short summary, `err` diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aspca::cli
