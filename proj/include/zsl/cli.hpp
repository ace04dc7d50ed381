#pragma once

#include <string>
#include <vector>

namespace zsl::cli {

// Entry point behind the `zsl` binary. Exit codes: 0 success, 1 runtime
// failure, 2 usage/validation error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without program name

}  // namespace zsl::cli
