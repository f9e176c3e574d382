// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "stepwidth/strategy.hpp"

namespace stepwidth {

/// Bar geometry of the SVG, exposed so tests can map steps to x coordinates.
struct PlotLayout {
  static constexpr double kLeft = 60.0;
  static constexpr double kBarWidth = 800.0;
  static constexpr double kBarTop = 30.0;
  static constexpr double kBarHeight = 40.0;
  static constexpr double kGraphTop = 110.0;
  static constexpr double kGraphHeight = 200.0;
};

/// `step,width_ratio` rows, one per step.
std::string strategy_csv(const Strategy& s);

/// Standalone SVG: a color bar (yellow = smallest option, green = largest,
/// linear in between; one rect per run of equal widths) above a step vs
/// width line graph.
std::string strategy_svg(const Strategy& s, std::span<const WidthRatio> options);

/// Writes `<base>.svg` and `<base>.csv`.
void plot_strategy(const Strategy& s, std::span<const WidthRatio> options, const std::filesystem::path& base);

}  // namespace stepwidth
