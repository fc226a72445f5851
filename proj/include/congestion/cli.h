#pragma once

#include <ostream>

namespace congestion {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNonConvergence = 2;

// Entry point of the cgames tool. Subcommands: analyze, sweep, atomic-lp,
// verify, gen.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace congestion
