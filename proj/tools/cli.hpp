#pragma once

#include <ostream>

namespace ergograph {

/// Exit codes: 0 PASS, 1 FAIL, 2 INCONCLUSIVE, 3 configuration, usage or I/O error.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitInconclusive = 2, kExitError = 3 };

/// The `ergograph` command line. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ergograph
