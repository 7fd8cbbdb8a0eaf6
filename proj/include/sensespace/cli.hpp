#pragma once

#include <iosfwd>

namespace sensespace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point for the `sense-space` tool. Data goes to `out`; diagnostics and
/// machine-readable errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sensespace::cli
