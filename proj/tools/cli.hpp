#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stdpp::cli {

/// Exit statuses shared by every command.
enum Exit : int { kOk = 0, kDomainFailure = 1, kUsageError = 2 };

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`; the return value is the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stdpp::cli
