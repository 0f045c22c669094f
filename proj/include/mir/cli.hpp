#pragma once

#include <string>
#include <vector>

namespace mir {

// Full command-line surface. Exposed as a library call so tests can drive
// commands in-process; the mir binary forwards its argv here.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace mir
