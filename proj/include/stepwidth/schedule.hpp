// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "stepwidth/tensor.hpp"

namespace stepwidth {

/// Variance schedule of the forward noising chain. Timesteps run 1..T and
/// are stored 0-based; alpha_bar(0) is 1 by convention.
class NoiseSchedule {
 public:
  /// Builds the derived tables from explicit betas, each in (0, 1).
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(index(t)); }
  double alpha(int t) const { return alphas_.at(index(t)); }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars_.at(index(t)); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  /// Throws std::out_of_range unless 1 <= t <= T.
  void check_step(int t) const;

 private:
  std::size_t index(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end);

/// Strictly increasing subset of 1..T visited by a respaced sampler.
class TimestepSpacing {
 public:
  TimestepSpacing(std::vector<int> steps, int total_steps);

  static TimestepSpacing full(int total_steps);

  const std::vector<int>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  int operator[](std::size_t i) const { return steps_[i]; }
  int total_steps() const { return total_; }
  bool is_full() const { return static_cast<int>(steps_.size()) == total_; }

  friend bool operator==(const TimestepSpacing&, const TimestepSpacing&) = default;

 private:
  std::vector<int> steps_;
  int total_;
};

/// The n timesteps floor(i*T/n) + 1 for i = 0..n-1.
TimestepSpacing respace(int total_steps, int n);

/// Schedule over the spacing positions with beta'_i = 1 - abar(s_i)/abar(s_{i-1}),
/// so DDPM ancestral sampling can run on a subsequence.
NoiseSchedule respaced_schedule(const NoiseSchedule& sched, const TimestepSpacing& spacing);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched);

/// Rows of x0 each diffused to their own step `t[r]`.
Tensor forward_diffuse_rows(const Tensor& x0, const std::vector<int>& t, const Tensor& eps,
                            const NoiseSchedule& sched);

/// Ancestral step with fixed variance beta_t: mu + sigma_t z, and z ignored at t = 1.
Tensor ddpm_reverse_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& sched, const Tensor& z);

/// DDIM update from t to t_prev (0 means the clean end) through the predicted x0.
Tensor ddim_reverse_step(const Tensor& x_t, int t, int t_prev, const Tensor& eps_hat, double eta,
                         const NoiseSchedule& sched, const Tensor& z);

/// DDIM noise scale eta * sqrt((1-abar_prev)/(1-abar_t)) * sqrt(1 - abar_t/abar_prev).
double ddim_sigma(int t, int t_prev, double eta, const NoiseSchedule& sched);

}  // namespace stepwidth
