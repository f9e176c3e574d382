// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stepwidth/denoiser.hpp"
#include "stepwidth/schedule.hpp"
#include "stepwidth/strategy.hpp"

namespace stepwidth {

/// Strategy length disagrees with the sampling spacing.
class StaleStrategyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Sampler {
  enum class Kind { ddpm, ddim };
  Kind kind = Kind::ddpm;
  double eta = 0.0;  // ddim only

  static Sampler ddpm() { return {Kind::ddpm, 0.0}; }
  static Sampler ddim(double eta = 0.0) { return {Kind::ddim, eta}; }
  static Sampler parse(std::string_view name, double eta = 0.0);
  std::string name() const { return kind == Kind::ddpm ? "ddpm" : "ddim"; }

  friend bool operator==(const Sampler&, const Sampler&) = default;
};

/// eps_hat for the batch at timestep t; `position` indexes the spacing.
using NoisePredictor = std::function<Tensor(const Tensor& x_t, int t, std::size_t position)>;

/// Draws x_T ~ N(0, I) and walks the spacing from its last entry down to the
/// first. Random draws come from one stream seeded by `seed`: x_T first, then
/// the per-step noise for each step that uses it.
Tensor run_sampler(const NoisePredictor& predict, const NoiseSchedule& sched, const Sampler& sampler,
                   const TimestepSpacing& spacing, std::size_t n, std::size_t dim, std::uint64_t seed);

/// Step-aware sampling: spacing position i runs the sub-network strategy[i].
Tensor generate_with_strategy(const SupernetParams& net, const NoiseSchedule& sched, const Strategy& strategy,
                              const Sampler& sampler, const TimestepSpacing& spacing, std::size_t n,
                              std::uint64_t seed);

/// One network for every step.
Tensor generate_baseline(const DenseNetwork& net, const NoiseSchedule& sched, const Sampler& sampler,
                         const TimestepSpacing& spacing, std::size_t n, std::uint64_t seed);

void check_strategy_alignment(const Strategy& strategy, const TimestepSpacing& spacing);

struct QualityScore {
  double value = 0.0;
  std::string metric_name = "mmd2_rbf";
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// Median Euclidean distance over all unordered pairs of rows.
double median_pairwise_distance(const Tensor& points);

/// Biased (V-statistic) MMD^2 with an RBF kernel against a fixed reference
/// set; the reference self-term is computed once.
class MmdReference {
 public:
  MmdReference(Tensor reference, double bandwidth);

  double score(const Tensor& samples) const;
  double bandwidth() const { return bandwidth_; }
  const Tensor& reference() const { return reference_; }

 private:
  Tensor reference_;
  double bandwidth_;
  double self_term_;
};

/// MMD^2 of samples vs reference. Without a bandwidth, the median pairwise
/// distance of the pooled set is used.
QualityScore mmd_quality(const Tensor& samples, const Tensor& reference, std::optional<double> bandwidth = {});

using FlopCount = std::uint64_t;

/// Per-forward (one input row) cost at `width`. An affine map m -> n costs
/// 2mn + n; SiLU, the time-injection add and the residual add cost one
/// FLOP per element. The sinusoidal embedding is not counted.
FlopCount flops_per_step(const DenoiserConfig& config, WidthRatio width);

struct FlopsReport {
  std::vector<FlopCount> per_step;
  double average = 0.0;
  FlopCount total = 0;
};

FlopsReport strategy_flops(const DenoiserConfig& config, const Strategy& strategy, const TimestepSpacing& spacing);

struct StrategyEvaluation {
  QualityScore quality;
  FlopsReport flops;

  friend bool operator==(const StrategyEvaluation& a, const StrategyEvaluation& b) {
    return a.quality.value == b.quality.value && a.quality.seed == b.quality.seed &&
           a.quality.sample_count == b.quality.sample_count && a.flops.per_step == b.flops.per_step &&
           a.flops.average == b.flops.average && a.flops.total == b.flops.total;
  }
};

StrategyEvaluation evaluate_strategy(const SupernetParams& net, const NoiseSchedule& sched, const Strategy& strategy,
                                     const Sampler& sampler, const TimestepSpacing& spacing, const Tensor& reference,
                                     std::size_t n, std::uint64_t seed, std::optional<double> bandwidth = {});

/// `strategy_id,quality,avg_flops,total_flops,seed`
std::string evaluation_csv_header();
std::string evaluation_csv_row(std::string_view strategy_id, const StrategyEvaluation& eval);

}  // namespace stepwidth
