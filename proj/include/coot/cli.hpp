#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coot::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3, kNotConverged = 4 };

/// Runs one subcommand (coot, gw, cocluster, hda, election, gen). `args`
/// excludes the program name. The JSON report goes to `out`, diagnostics to
/// `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coot::cli
