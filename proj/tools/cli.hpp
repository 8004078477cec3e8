#ifndef NEGDEP_TOOLS_CLI_HPP
#define NEGDEP_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace negdep::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kNumericalError = 2 };

/// Runs one command line (args exclude the program name). "--out -" writes to `out`;
/// diagnostics, usage text and progress go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace negdep::cli

#endif
