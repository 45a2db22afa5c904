#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace subman::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `subman` tool. `args` excludes the program name.
/// Subcommands: simulate, estimate, rates.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subman::cli
