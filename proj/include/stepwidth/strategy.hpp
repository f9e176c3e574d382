// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stepwidth/denoiser.hpp"

namespace stepwidth {

/// Per-step width choice; entry i is used at spacing position i (ascending
/// timestep order, so entry 0 denoises the last step of generation).
struct Strategy {
  std::vector<WidthRatio> widths;

  std::size_t size() const { return widths.size(); }
  WidthRatio operator[](std::size_t i) const { return widths[i]; }

  /// Comma-separated numerators, e.g. "8,8,2".
  std::string to_string() const;

  auto operator<=>(const Strategy&) const = default;
  bool operator==(const Strategy&) const = default;
};

Strategy uniform_strategy(WidthRatio width, std::size_t steps);

/// Half-open step interval [begin, end).
using StepRange = std::pair<std::size_t, std::size_t>;

/// `small` inside the given disjoint ranges, `large` elsewhere.
Strategy make_range_strategy(WidthRatio large, WidthRatio small, const std::vector<StepRange>& small_ranges,
                             std::size_t steps);

}  // namespace stepwidth
