#ifndef MISLAB_TOOLS_CLI_HPP
#define MISLAB_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace mislab::cli {

/// Exit statuses of the command-line front end.
enum Exit : int { ok = 0, usage = 1, invariant_failed = 2 };

/// Runs one command line (args[0] is the program name). Reports go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mislab::cli

#endif  // MISLAB_TOOLS_CLI_HPP
