// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace topoledger {

inline constexpr const char* kVersion = "0.1.0";

// Entry point for the `topoledger` command line tool. Returns the process
// exit code; diagnostics go to `err`, human-readable summaries to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace topoledger
