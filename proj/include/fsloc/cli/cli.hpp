// Copyright (c) 2026, The fsloc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace fsloc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Subcommands: synth, train, eval, localize, gradcheck, inspect.
/// Results go to `out`, diagnostics and usage to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsloc::cli
