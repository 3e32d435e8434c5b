#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lambada::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default run root.
inline constexpr const char* kRunRootEnv = "LAMBADA_RUN_DIR";

/// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lambada::cli
