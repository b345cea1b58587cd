#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace m3hl::cli {

/// Environment variable naming the directory that relative --out paths resolve against.
inline constexpr const char* kOutputRootEnv = "M3HL_OUTPUT_ROOT";

/// Entry point shared by the executable and the tests. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace m3hl::cli
