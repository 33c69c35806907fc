// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace adact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumeric = 4;

/// Runs one `adact` invocation and returns its exit code. Reports go to
/// `out`, diagnostics and warnings to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adact::cli
