#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stto::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kInvalidArguments = 2,
    kIoError = 3,
    kNumericFailure = 4,
};

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stto::cli
