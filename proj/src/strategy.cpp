// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/strategy.hpp"

#include <algorithm>
#include <stdexcept>

namespace stepwidth {

std::string Strategy::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i].eighths);
  }
  return out;
}

Strategy uniform_strategy(WidthRatio width, std::size_t steps) { return Strategy{std::vector<WidthRatio>(steps, width)}; }

Strategy make_range_strategy(WidthRatio large, WidthRatio small, const std::vector<StepRange>& small_ranges,
                             std::size_t steps) {
  auto ranges = small_ranges;
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto [begin, end] = ranges[i];
    if (begin >= end || end > steps)
      throw std::invalid_argument("step range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                  ") is empty or outside [0, " + std::to_string(steps) + ")");
    if (i > 0 && begin < ranges[i - 1].second)
      throw std::invalid_argument("step ranges overlap at " + std::to_string(begin));
  }
  Strategy s = uniform_strategy(large, steps);
  for (const auto& [begin, end] : ranges)
    std::fill(s.widths.begin() + begin, s.widths.begin() + end, small);
  return s;
}

}  // namespace stepwidth
