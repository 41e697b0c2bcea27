#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace synthcse::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // runtime error after validation
inline constexpr int kExitUsage = 2;        // bad flags, config or inputs; nothing written
inline constexpr int kExitBelowTarget = 3;  // ran to completion but missed a threshold

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synthcse::cli
