#pragma once

#include <iosfwd>

namespace dyad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Model files written by `fit` carry this version.
inline constexpr int kModelFormatVersion = 1;

/// Entry point of the `dyad` tool. Data goes to files named on the command
/// line; `out` receives help text and `err` diagnostics.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dyad::cli
