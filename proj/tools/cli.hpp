#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cfinc/gateway.hpp"
#include "cfinc/runner.hpp"

namespace cfinc::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUsage = 64;

struct Context {
  gateway::EnvLookup env;  // defaults to the process environment
  runner::RunHooks hooks;  // transport seam for tests
};

// Runs one command line (without the program name). Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Context& context = {});

}  // namespace cfinc::cli
