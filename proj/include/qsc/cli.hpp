#pragma once

// Command-line front end. Every output begins with a "# " header carrying the
// tool version, seed, tolerances and a hash of the effective configuration.
//
// Exit codes: 0 success, 2 invalid input or flags, 3 non-convergence, 1 other errors.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qsc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitConvergence = 3;

/// `args` excludes the program name. Results go to `out` unless --out is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

/// Thread count for parallel restarts: hardware concurrency capped by QSC_THREADS.
int default_threads();

std::string version();

}  // namespace qsc::cli
