#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cephforge::cli {

/// Exit codes: 0 success, 1 validation error, 2 runtime error.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kRuntime = 2;

/// Runs one subcommand. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace cephforge::cli
