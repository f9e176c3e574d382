// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stepwidth {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw std::invalid_argument("noise schedule needs at least one step");
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0))
      throw std::invalid_argument("beta at step " + std::to_string(i + 1) + " must lie in (0, 1), got " +
                                  std::to_string(b));
    alphas_.push_back(1.0 - b);
    running *= alphas_.back();
    alpha_bars_.push_back(running);
  }
}

std::size_t NoiseSchedule::index(int t) const {
  check_step(t);
  return static_cast<std::size_t>(t - 1);
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps())
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
}

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule step count must be >= 1, got " + std::to_string(steps));
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("linear schedule requires 0 < beta_start <= beta_end < 1, got " +
                                std::to_string(beta_start) + ", " + std::to_string(beta_end));
  std::vector<double> betas(static_cast<std::size_t>(steps));
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    const double span = beta_end - beta_start;
    for (int i = 0; i < steps; ++i) betas[i] = beta_start + span * static_cast<double>(i) / (steps - 1);
  }
  return NoiseSchedule(std::move(betas));
}

TimestepSpacing::TimestepSpacing(std::vector<int> steps, int total_steps) : steps_(std::move(steps)), total_(total_steps) {
  if (steps_.empty()) throw std::invalid_argument("timestep spacing must be non-empty");
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (steps_[i] < 1 || steps_[i] > total_)
      throw std::invalid_argument("spacing entry " + std::to_string(steps_[i]) + " outside [1, " +
                                  std::to_string(total_) + "]");
    if (i > 0 && steps_[i] <= steps_[i - 1]) throw std::invalid_argument("spacing must be strictly increasing");
  }
}

TimestepSpacing TimestepSpacing::full(int total_steps) { return respace(total_steps, total_steps); }

TimestepSpacing respace(int total_steps, int n) {
  if (n < 1 || n > total_steps)
    throw std::invalid_argument("respace: n=" + std::to_string(n) + " outside [1, " + std::to_string(total_steps) +
                                "]");
  std::vector<int> steps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    steps[i] = static_cast<int>(static_cast<long long>(i) * total_steps / n) + 1;
  return TimestepSpacing(std::move(steps), total_steps);
}

NoiseSchedule respaced_schedule(const NoiseSchedule& sched, const TimestepSpacing& spacing) {
  if (spacing.total_steps() != sched.steps())
    throw std::invalid_argument("spacing built for T=" + std::to_string(spacing.total_steps()) +
                                " used with a schedule of T=" + std::to_string(sched.steps()));
  std::vector<double> betas;
  betas.reserve(spacing.size());
  double prev = 1.0;
  for (int s : spacing.steps()) {
    const double ab = sched.alpha_bar(s);
    betas.push_back(1.0 - ab / prev);
    prev = ab;
  }
  return NoiseSchedule(std::move(betas));
}

namespace {
void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}
}  // namespace

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched) {
  require_same_shape("forward_diffuse", x0, eps);
  sched.check_step(t);
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  Tensor out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + s * eps[i];
  return out;
}

Tensor forward_diffuse_rows(const Tensor& x0, const std::vector<int>& t, const Tensor& eps,
                            const NoiseSchedule& sched) {
  require_same_shape("forward_diffuse_rows", x0, eps);
  if (t.size() != x0.rows())
    throw ShapeError("forward_diffuse_rows: " + std::to_string(t.size()) + " timesteps for " +
                     std::to_string(x0.rows()) + " rows");
  Tensor out(x0.shape());
  const std::size_t d = x0.cols();
  for (std::size_t r = 0; r < t.size(); ++r) {
    sched.check_step(t[r]);
    const double ab = sched.alpha_bar(t[r]);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = a * x0[r * d + c] + s * eps[r * d + c];
  }
  return out;
}

Tensor ddpm_reverse_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& sched, const Tensor& z) {
  sched.check_step(t);
  require_same_shape("ddpm_reverse_step", x_t, eps_hat);
  if (t > 1) require_same_shape("ddpm_reverse_step", x_t, z);
  const double beta = sched.beta(t);
  const double coef = beta / std::sqrt(1.0 - sched.alpha_bar(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
  const double sigma = t > 1 ? std::sqrt(beta) : 0.0;
  Tensor out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double mu = (x_t[i] - coef * eps_hat[i]) * inv_sqrt_alpha;
    out[i] = t > 1 ? mu + sigma * z[i] : mu;
  }
  return out;
}

double ddim_sigma(int t, int t_prev, double eta, const NoiseSchedule& sched) {
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_prev);
}

Tensor ddim_reverse_step(const Tensor& x_t, int t, int t_prev, const Tensor& eps_hat, double eta,
                         const NoiseSchedule& sched, const Tensor& z) {
  sched.check_step(t);
  if (t_prev < 0 || t_prev >= t)
    throw std::invalid_argument("ddim_reverse_step: t_prev=" + std::to_string(t_prev) + " must lie in [0, t=" +
                                std::to_string(t) + ")");
  if (eta < 0.0) throw std::invalid_argument("ddim_reverse_step: eta must be >= 0");
  require_same_shape("ddim_reverse_step", x_t, eps_hat);
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const double sigma = eta > 0.0 ? ddim_sigma(t, t_prev, eta, sched) : 0.0;
  const double dir_var = 1.0 - ab_prev - sigma * sigma;
  if (dir_var < 0.0)
    throw std::domain_error("ddim_reverse_step: 1 - abar_prev - sigma^2 = " + std::to_string(dir_var) +
                            " is negative (eta=" + std::to_string(eta) + ", t=" + std::to_string(t) +
                            ", t_prev=" + std::to_string(t_prev) + ")");
  if (sigma > 0.0) require_same_shape("ddim_reverse_step", x_t, z);
  const double sqrt_ab_t = std::sqrt(ab_t);
  const double sqrt_one_minus_ab_t = std::sqrt(1.0 - ab_t);
  const double sqrt_ab_prev = std::sqrt(ab_prev);
  const double dir = std::sqrt(dir_var);
  Tensor out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0_pred = (x_t[i] - sqrt_one_minus_ab_t * eps_hat[i]) / sqrt_ab_t;
    double v = sqrt_ab_prev * x0_pred + dir * eps_hat[i];
    if (sigma > 0.0) v += sigma * z[i];
    out[i] = v;
  }
  return out;
}

}  // namespace stepwidth
