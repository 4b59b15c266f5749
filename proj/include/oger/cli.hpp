#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace oger::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Errors are reported
/// on `err` as a single line `oger: error: <code>: <message>`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oger::cli
