#pragma once

#include <string>
#include <vector>

namespace fray {

/// Entry point of the `fray` tool, callable in-process for tests.
/// argv excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& argv);

}  // namespace fray
