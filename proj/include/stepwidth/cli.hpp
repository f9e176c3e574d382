// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stepwidth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `stepwidth` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors (usage text goes to `err`) and 2
/// on runtime errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace stepwidth
