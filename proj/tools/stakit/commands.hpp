#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stakit::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,
    exit_usage = 2,
    exit_numeric = 3,
};

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace stakit::cli
