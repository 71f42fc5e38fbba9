#pragma once

// The `repute` command line: compute, schedule, simulate, consensus-sim and
// compare-log. Artifacts land in --out (default $REPUTE_OUT, else
// ./repute-out) together with a manifest of input and output digests.

#include <iosfwd>
#include <string>
#include <vector>

namespace repute::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // bad flags, config or input
inline constexpr int kExitRuntime = 2;  // failure while running

/// `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace repute::cli
