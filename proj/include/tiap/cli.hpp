#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tiap {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line (args excludes the program name). Returns the exit
/// status: 0 success, 1 validation error or bad usage, 2 I/O error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tiap
