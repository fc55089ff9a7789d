#pragma once

#include <chrono>
#include <string>

namespace menulens::detail {

struct ProcessResult {
  int exit_code = 0;
  bool timed_out = false;
  std::string stdout_data;
  std::string stderr_data;
};

/// Runs `/bin/sh -c command`, collecting both output streams. On timeout the
/// whole process group is killed and `timed_out` is set.
ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout);

/// Single-quotes `arg` for /bin/sh.
std::string shell_quote(const std::string& arg);

}  // namespace menulens::detail
