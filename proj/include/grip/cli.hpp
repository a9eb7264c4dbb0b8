#pragma once

#include <string>
#include <vector>

namespace grip {

/// Entry point shared by the `grip` binary and tests.
/// Exit codes: 0 success, 2 usage/config error, 3 runtime failure.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace grip
