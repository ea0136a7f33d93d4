#pragma once

#include <string>
#include <vector>

namespace largegt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `largegt` tool. args[0] is the program name.
/// Returns 0 on success, 1 on a validation/runtime error, 2 on a usage error.
int cli_dispatch(const std::vector<std::string>& args);
int cli_dispatch(int argc, const char* const* argv);

/// Version string recorded in run manifests.
std::string tool_version();

}  // namespace largegt
