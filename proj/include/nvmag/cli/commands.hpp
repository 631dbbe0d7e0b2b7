#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nvmag/errors.hpp"

namespace nvmag::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code);

// Runs the command line `args` (without the program name). Reports go to
// `out`, diagnostics to `err`; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nvmag::cli
