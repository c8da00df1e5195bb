#pragma once

#include <string>
#include <vector>

namespace vmstool {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Parses and runs one vmstool invocation. `args` excludes the program name.
// Errors are reported on stderr; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace vmstool
