#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reseq {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,   // numerical trouble, failed fits, internal errors
    kExitUsage = 2,     // bad flags, unknown ids, unreadable or malformed inputs
    kExitPruned = 3,    // outlier pruning would leave fewer than two frames
    kExitBind = 4,      // serve could not bind its port
};

// args excludes the program name. Normal output goes to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reseq
