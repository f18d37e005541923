#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sonarnav {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitInput = 2,
  kExitMission = 3,
};

/// Entry point for the sonarnav tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sonarnav
