#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sisvive::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Runs one invocation. `args` excludes the program name. Reports go to
/// `out` unless redirected with --out; diagnostics go to `err` as a single
/// line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sisvive::cli
