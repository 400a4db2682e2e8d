#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spcnn::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidArgument = 2,
  kIoError = 3,
  kNumericFailure = 4,
};

// Runs `spcnn <args...>` (args exclude the program name) and returns the
// process exit code. Diagnostics go to `err`, results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spcnn::cli
