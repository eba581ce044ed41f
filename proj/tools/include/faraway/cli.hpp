#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace faraway::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `faraway` tool. `args` excludes the program name.
// Verbs: run, train, eval, stats, plot. Settings are resolved as built-in
// defaults < config file < command-line flags (including key=value
// overrides).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace faraway::cli
