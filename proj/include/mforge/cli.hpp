#pragma once

#include <string>
#include <vector>

namespace mforge::cli {

/// Runs the motif-forge command line (args exclude the program name).
/// Exit codes: 0 success, 2 usage/validation, 3 missing artifact, 4 runtime.
int run(const std::vector<std::string>& args);

}  // namespace mforge::cli
