#pragma once

#include <ostream>

namespace pulse::cli {

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kHypothesisViolation = 2,
  kUsage = 64,
};

/// Entry point of the `pulse` tool; streams stand in for stdout/stderr so the
/// command can be driven from tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pulse::cli
