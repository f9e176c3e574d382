// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <limits>
#include <random>
#include <vector>

#include "stepwidth/search.hpp"

namespace stepwidth::testing {

/// Additive fitness over 5 steps x 3 widths: quality is a per-(step, width)
/// table sum, FLOPs the mean width fraction.
struct FitnessTable {
  static constexpr std::size_t kSteps = 5;
  std::vector<WidthRatio> options{WidthRatio{2}, WidthRatio{5}, WidthRatio{8}};
  std::array<std::array<double, 3>, kSteps> quality{};

  static FitnessTable random(std::uint64_t seed) {
    FitnessTable t;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& row : t.quality)
      for (auto& q : row) q = u(rng);
    return t;
  }

  std::size_t index(WidthRatio w) const {
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i] == w) return i;
    return options.size();
  }

  Objectives operator()(const Strategy& s) const {
    Objectives o;
    for (std::size_t i = 0; i < kSteps; ++i) {
      o.quality += quality[i][index(s[i])];
      o.flops += s[i].value() / kSteps;
    }
    return o;
  }

  /// Minimum scalar score over all 3^5 strategies by enumeration.
  double exhaustive_minimum(double flops_weight) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < 243; ++code) {
      Strategy s;
      for (std::size_t i = 0, c = code; i < kSteps; ++i, c /= 3) s.widths.push_back(options[c % 3]);
      const Objectives o = (*this)(s);
      best = std::min(best, scalar_score(o.quality, o.flops, flops_weight));
    }
    return best;
  }
};

/// O(n^2) check that no member of `pool` dominates any member of `front`.
inline bool undominated(const std::vector<Individual>& front, const std::vector<Individual>& pool) {
  for (const auto& f : front)
    for (const auto& p : pool)
      if (p.quality <= f.quality && p.avg_flops <= f.avg_flops && (p.quality < f.quality || p.avg_flops < f.avg_flops))
        return false;
  return true;
}

}  // namespace stepwidth::testing
