#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace maskvd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Runs one command line (without the program name). Flags override
/// --config values, which override the defaults.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maskvd::cli
