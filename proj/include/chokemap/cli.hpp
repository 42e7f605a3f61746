#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chokemap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Human-readable
/// progress goes to `out`; failures are reported on `err` as a JSON object
/// `{"error": {...}}`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chokemap::cli
