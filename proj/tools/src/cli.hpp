#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "p2ot/errors.hpp"

namespace p2ot::cli {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitNumerical = 3,
};

int exit_code_for(ErrorKind kind);

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Regular output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2ot::cli
