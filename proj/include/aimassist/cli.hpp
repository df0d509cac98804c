#pragma once

#include <iosfwd>

namespace aimassist {

/// Exit codes of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitSchema = 4 };

/// Entry point of the `aimassist` tool with run, calibrate, train, serve and
/// report subcommands.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aimassist
