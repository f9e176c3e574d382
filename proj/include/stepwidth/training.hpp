// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "stepwidth/autodiff.hpp"
#include "stepwidth/denoiser.hpp"
#include "stepwidth/schedule.hpp"

namespace stepwidth {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  int iterations = 10000;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  /// Iterations per progress line and report interval; 0 disables logging.
  int log_interval = 1000;

  void validate() const;
};

/// Anything the supernet training step can update: a parameter list plus a
/// differentiable prediction of the noise at a given width.
class SlimmableModel {
 public:
  virtual ~SlimmableModel() = default;
  virtual std::vector<Tensor>& parameters() = 0;
  virtual Var predict(Graph& g, std::span<const Var> params, WidthRatio width, const Tensor& x_t,
                      const std::vector<int>& t) const = 0;
};

class SupernetModel final : public SlimmableModel {
 public:
  explicit SupernetModel(SupernetParams& net) : net_(net) {}
  std::vector<Tensor>& parameters() override { return net_.tensors; }
  Var predict(Graph& g, std::span<const Var> params, WidthRatio width, const Tensor& x_t,
              const std::vector<int>& t) const override {
    return denoiser_graph(g, params, net_.config, width, x_t, t);
  }

 private:
  SupernetParams& net_;
};

/// Mean over rows of |eps - eps_theta(x_t, t)|^2 on the graph; x_t is formed
/// from x0, t and eps by the closed-form forward process.
Var denoising_loss_graph(Graph& g, std::span<const Var> params, const SlimmableModel& model, WidthRatio width,
                         const Tensor& x0, const std::vector<int>& t, const Tensor& eps, const NoiseSchedule& sched);

double denoising_loss(SlimmableModel& model, WidthRatio width, const Tensor& x0, const std::vector<int>& t,
                      const Tensor& eps, const NoiseSchedule& sched);

WidthRatio sample_random_width(std::span<const WidthRatio> options, std::mt19937_64& rng);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  std::int64_t steps_ = 0;
  std::vector<Tensor> m_, v_;
};

struct IterationReport {
  std::array<double, 3> losses{};  // largest, smallest, random
  std::array<WidthRatio, 3> widths{};
};

/// One supernet iteration: draws per-row t and eps for the batch, samples
/// the random width, then takes three sequential gradient steps on the
/// largest, smallest and random sub-network. `options` must be sorted.
IterationReport ddsm_train_iteration(SlimmableModel& model, std::span<const WidthRatio> options, const Tensor& x0,
                                     const NoiseSchedule& sched, std::mt19937_64& rng, Optimizer& optimizer);

struct TrainReport {
  struct Interval {
    int end_iteration = 0;
    std::array<double, 3> mean_losses{};
    double seconds = 0.0;
  };
  std::vector<Interval> intervals;
  std::array<double, 3> first_losses{};
  std::array<double, 3> last_losses{};
};

/// Stateful training driver; exposes single steps for tests.
class Trainer {
 public:
  Trainer(SupernetParams init, const Tensor& dataset, const TrainConfig& cfg, NoiseSchedule sched);

  IterationReport step();
  /// Runs the remaining configured iterations, logging to `log` if given and
  /// calling `on_interval` after each logging interval.
  void run(std::ostream* log = nullptr, const std::function<void(const Trainer&)>& on_interval = {});

  const SupernetParams& params() const { return params_; }
  const SupernetParams& ema() const { return ema_; }
  const TrainReport& report() const { return report_; }
  int iterations_done() const { return done_; }

 private:
  Tensor next_batch();

  SupernetParams params_;
  SupernetParams ema_;
  Tensor dataset_;
  TrainConfig cfg_;
  NoiseSchedule sched_;
  std::mt19937_64 rng_;
  Optimizer optimizer_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  int done_ = 0;
  TrainReport report_;
};

struct TrainResult {
  SupernetParams ema;
  SupernetParams raw;
  TrainReport report;
};

TrainResult train_loop(const Tensor& dataset, const DenoiserConfig& config, const TrainConfig& cfg,
                       const NoiseSchedule& sched, std::ostream* log = nullptr);

}  // namespace stepwidth
