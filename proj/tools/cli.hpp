#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace menulens::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitEmptyPipeline = 3,
  kExitBelowThreshold = 4,
};

/// Runs one command line (args excludes the program name). Machine output
/// goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace menulens::cli
