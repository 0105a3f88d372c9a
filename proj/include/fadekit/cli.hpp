#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fadekit {

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,   ///< verify found a violated property
  kExitBadInput = 2,      ///< malformed input or invalid parameters
  kExitUnstable = 3,      ///< the state-space system is not certified stable
};

/// Runs one command; args excludes the program name. Reports go to `out` (or the
/// --output file), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fadekit
