#pragma once

#include <ostream>

namespace edgesim {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

/// Entry point of the `edgesim` tool. Output goes to `out`, diagnostics to
/// `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace edgesim
