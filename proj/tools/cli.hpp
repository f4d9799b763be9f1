// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace revopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `revopt` tool. Output goes to `out`, diagnostics and
/// usage text to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace revopt::cli
