#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace anonfd::cli {

enum ExitCode : int {
  kPass = 0,
  kPropertyFailure = 1,
  kUsageError = 2,
  kInternalError = 3,
};

/// Entry point of the anonfd tool; returns the process exit code.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anonfd::cli
