#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lobexec::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

/// Runs the command line (args excludes the program name). Reports go to out,
/// diagnostics to err. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lobexec::cli
