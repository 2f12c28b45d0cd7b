#ifndef F2F_TOOLS_CLI_HPP
#define F2F_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace f2f::cli {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_data = 3,
    exit_precondition = 4,
};

/**
 * Entry point of the `f2f` tool. `args` excludes the program name.
 * Machine-readable output goes to `out`, diagnostics to `err`.
 */
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace f2f::cli

#endif  // F2F_TOOLS_CLI_HPP
