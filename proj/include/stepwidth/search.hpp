// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "stepwidth/evaluation.hpp"
#include "stepwidth/strategy.hpp"

namespace stepwidth {

struct SearchConfig {
  int generations = 10;
  std::size_t population = 50;
  double mutation = 0.001;
  double flops_weight = 0.1;
  Sampler sampler = Sampler::ddpm();
  /// Respaced sampling length; 0 searches over the full chain.
  int steps = 0;
  /// Samples generated per strategy evaluation.
  std::size_t samples = 2048;
  /// RBF bandwidth of the quality score in (standardized) data units; 0 uses
  /// the median pairwise distance of the reference set.
  double bandwidth = 0.2;
  std::uint64_t seed = 0;
  /// Search space; empty means every width the supernet allows.
  std::vector<WidthRatio> options;

  void validate() const;
};

/// The two minimized objectives of one strategy.
struct Objectives {
  double quality = 0.0;
  double flops = 0.0;
};

struct Individual {
  Strategy strategy;
  double quality = std::numeric_limits<double>::quiet_NaN();
  /// Average per-step FLOPs in the search's cost unit.
  double avg_flops = std::numeric_limits<double>::quiet_NaN();
  double scalar_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t rank = 0;
  double crowding = 0.0;

  bool evaluated() const { return !std::isnan(quality) && !std::isnan(avg_flops); }
};

/// quality + w_M * avg_flops; lower is better.
double scalar_score(double quality, double avg_flops, double flops_weight);

/// a is no worse in both objectives and strictly better in one.
bool dominates(const Individual& a, const Individual& b);

/// One uniform strategy per option (ascending), then uniformly random ones.
std::vector<Strategy> init_population(std::size_t population, std::size_t steps, std::span<const WidthRatio> options,
                                      std::mt19937_64& rng);

/// Fronts of indices into `pop`; front 0 is the non-dominated set.
std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Individual>& pop);

/// Standard NSGA-II crowding distance over the members of `front`; boundary
/// points per objective are infinite, objectives with zero range add nothing.
std::vector<double> crowding_distance(const std::vector<Individual>& pop, const std::vector<std::size_t>& front);

/// Keeps the best `population` individuals by (front rank, crowding desc,
/// strategy order) and returns them in their pool order with rank and
/// crowding filled in.
std::vector<Individual> select(const std::vector<Individual>& pool, std::size_t population);

/// Children a[0, pos) ++ b[pos, L) and b[0, pos) ++ a[pos, L).
std::pair<Strategy, Strategy> crossover_at(const Strategy& a, const Strategy& b, std::size_t pos);

/// Cut point uniform in [1, L-1]; strategies shorter than 2 come back unchanged.
std::pair<Strategy, Strategy> single_point_crossover(const Strategy& a, const Strategy& b, std::mt19937_64& rng);

/// Each gene, with probability m, moves to a different option chosen uniformly.
Strategy mutate(const Strategy& s, double m, std::span<const WidthRatio> options, std::mt19937_64& rng);

struct GenerationLog {
  int generation = 0;
  double best_score = 0.0;
  std::size_t front_size = 0;
  std::size_t evals = 0;
};

struct SearchResult {
  Individual best;
  /// Non-dominated set over every strategy evaluated during the run.
  std::vector<Individual> pareto_front;
  std::vector<Individual> evaluated;
  std::vector<Individual> final_population;
  std::vector<GenerationLog> generations;
};

/// Must be safe to call concurrently.
using StrategyEvaluator = std::function<Objectives(const Strategy&)>;

/// NSGA-II over per-step width strategies. Each generation evaluates the new
/// individuals, ranks and selects, then breeds the next offspring by binary
/// tournament, crossover on every pair and mutation; the final selected
/// population is not bred again. Identical strategies are evaluated once.
SearchResult run_search(std::size_t steps, std::span<const WidthRatio> options, const SearchConfig& cfg,
                        const StrategyEvaluator& evaluate, std::ostream* log = nullptr);

struct SupernetSearch {
  SearchResult result;
  TimestepSpacing spacing;
  std::uint64_t eval_seed = 0;
  double bandwidth = 0.0;
  /// Quality of the full-width strategy; objective quality is reported in this unit.
  double quality_unit = 1.0;
  /// FLOPs per step of the full-width network; avg_flops is reported in this unit.
  double flops_unit = 1.0;
};

/// Searches a trained supernet against `reference` data. All individuals are
/// scored on the same evaluation seed and kernel bandwidth, and both
/// objectives are relative to the full-width strategy.
SupernetSearch evolutionary_search(const SupernetParams& net, const NoiseSchedule& sched, const Tensor& reference,
                                   const SearchConfig& cfg, std::ostream* log = nullptr);

}  // namespace stepwidth
