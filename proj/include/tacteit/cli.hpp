#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tacteit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Runs the command line `args` (args[0] is the program name).
/// Regular output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tacteit::cli
