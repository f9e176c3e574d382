// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepwidth/evaluation.hpp"
#include "stepwidth/search.hpp"
#include "stepwidth/strategy.hpp"

namespace stepwidth {

class StrategyFormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StrategyProvenance {
  std::uint64_t search_seed = 0;
  int generations = 0;
  std::size_t population = 0;
  double mutation = 0.0;
  double flops_weight = 0.0;
  double quality = 0.0;
  double avg_flops = 0.0;

  friend bool operator==(const StrategyProvenance&, const StrategyProvenance&) = default;
};

/// On-disk form of a strategy: widths are indices into width_options.
struct StrategyFile {
  std::size_t num_steps = 0;
  std::vector<WidthRatio> width_options;
  std::vector<std::size_t> widths;
  Sampler sampler;
  std::vector<int> spacing;
  int total_steps = 0;
  std::optional<StrategyProvenance> provenance;

  static StrategyFile from_strategy(const Strategy& s, std::vector<WidthRatio> options, const Sampler& sampler,
                                    const TimestepSpacing& spacing);
  Strategy strategy() const;
  TimestepSpacing timestep_spacing() const { return TimestepSpacing(spacing, total_steps); }
  /// Throws StrategyFormatError naming the first broken invariant.
  void validate() const;

  friend bool operator==(const StrategyFile&, const StrategyFile&) = default;
};

std::string strategy_to_json(const StrategyFile& file);
StrategyFile strategy_from_json(const std::string& text);

void save_strategy(const std::filesystem::path& path, const StrategyFile& file);
StrategyFile load_strategy(const std::filesystem::path& path);

/// Header `strategy,quality_rel,quality,avg_flops_rel,avg_flops,scalar_score,rank`;
/// the `_rel` columns are the search objectives, the others are scaled back by the units.
void write_archive_csv(const std::filesystem::path& path, const std::vector<Individual>& archive,
                       double quality_unit, double flops_unit);

}  // namespace stepwidth
