// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "stepwidth/random.hpp"

namespace stepwidth {

void TrainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("ema_decay must lie in [0, 1)");
  if (log_interval < 0) throw std::invalid_argument("log_interval must be >= 0");
}

Var denoising_loss_graph(Graph& g, std::span<const Var> params, const SlimmableModel& model, WidthRatio width,
                         const Tensor& x0, const std::vector<int>& t, const Tensor& eps, const NoiseSchedule& sched) {
  if (x0.rank() != 2) throw ShapeError("denoising_loss: x0 must be a batch matrix");
  const Tensor x_t = forward_diffuse_rows(x0, t, eps, sched);
  Var pred = model.predict(g, params, width, x_t, t);
  Var diff = sub(g.constant(eps), pred);
  return scale(sum(mul(diff, diff)), 1.0 / static_cast<double>(x0.rows()));
}

double denoising_loss(SlimmableModel& model, WidthRatio width, const Tensor& x0, const std::vector<int>& t,
                      const Tensor& eps, const NoiseSchedule& sched) {
  Graph g;
  std::vector<Var> params;
  for (const Tensor& p : model.parameters()) params.push_back(g.constant(p));
  return g.value(denoising_loss_graph(g, params, model, width, x0, t, eps, sched)).item();
}

WidthRatio sample_random_width(std::span<const WidthRatio> options, std::mt19937_64& rng) {
  if (options.empty()) throw std::invalid_argument("sample_random_width: empty option set");
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

void Optimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  ++steps_;
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].size(); ++j) params[i][j] -= lr_ * grads[i][j];
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.shape(), 0.0);
      v_.emplace_back(p.shape(), 0.0);
    }
  }
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double gr = grads[i][j];
      m_[i][j] = b1 * m_[i][j] + (1.0 - b1) * gr;
      v_[i][j] = b2 * v_[i][j] + (1.0 - b2) * gr * gr;
      params[i][j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps);
    }
  }
}

IterationReport ddsm_train_iteration(SlimmableModel& model, std::span<const WidthRatio> options, const Tensor& x0,
                                     const NoiseSchedule& sched, std::mt19937_64& rng, Optimizer& optimizer) {
  if (options.empty()) throw std::invalid_argument("ddsm_train_iteration: no width options");
  const std::size_t n = x0.rows();
  std::uniform_int_distribution<int> step_dist(1, sched.steps());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> t(n);
  for (int& v : t) v = step_dist(rng);
  Tensor eps(x0.shape());
  for (double& v : eps.data()) v = normal(rng);
  const WidthRatio random = sample_random_width(options, rng);

  IterationReport report;
  report.widths = {options.back(), options.front(), random};
  for (std::size_t k = 0; k < 3; ++k) {
    Graph g;
    std::vector<Var> params;
    for (const Tensor& p : model.parameters()) params.push_back(g.parameter(p));
    Var loss = denoising_loss_graph(g, params, model, report.widths[k], x0, t, eps, sched);
    report.losses[k] = g.value(loss).item();
    g.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (Var p : params) grads.push_back(g.grad(p));
    optimizer.step(model.parameters(), grads);
    for (const Tensor& p : model.parameters())
      if (!p.all_finite())
        throw std::runtime_error("training produced non-finite parameters at width " + report.widths[k].to_string());
  }
  return report;
}

Trainer::Trainer(SupernetParams init, const Tensor& dataset, const TrainConfig& cfg, NoiseSchedule sched)
    : params_(std::move(init)),
      ema_(params_),
      dataset_(dataset),
      cfg_(cfg),
      sched_(std::move(sched)),
      rng_(cfg.seed),
      optimizer_(cfg.optimizer, cfg.learning_rate) {
  cfg_.validate();
  params_.validate();
  if (dataset_.rank() != 2 || dataset_.cols() != params_.config.data_dim)
    throw ShapeError("training data must be n x " + std::to_string(params_.config.data_dim) + ", got " +
                     shape_to_string(dataset_.shape()));
  order_.resize(dataset_.rows());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
}

Tensor Trainer::next_batch() {
  const std::size_t d = dataset_.cols();
  Tensor batch({cfg_.batch_size, d});
  for (std::size_t r = 0; r < cfg_.batch_size; ++r) {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    const std::size_t src = order_[cursor_++];
    for (std::size_t c = 0; c < d; ++c) batch(r, c) = dataset_(src, c);
  }
  return batch;
}

IterationReport Trainer::step() {
  const Tensor batch = next_batch();
  SupernetModel model(params_);
  const IterationReport rep =
      ddsm_train_iteration(model, params_.config.allowed_widths, batch, sched_, rng_, optimizer_);
  const double decay = cfg_.ema_decay;
  for (std::size_t i = 0; i < params_.tensors.size(); ++i) {
    Tensor& e = ema_.tensors[i];
    const Tensor& p = params_.tensors[i];
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = decay * e[j] + (1.0 - decay) * p[j];
  }
  if (done_ == 0) report_.first_losses = rep.losses;
  report_.last_losses = rep.losses;
  ++done_;
  return rep;
}

void Trainer::run(std::ostream* log, const std::function<void(const Trainer&)>& on_interval) {
  const int interval = cfg_.log_interval > 0 ? cfg_.log_interval : cfg_.iterations;
  std::array<double, 3> acc{};
  int count = 0;
  auto start = std::chrono::steady_clock::now();
  while (done_ < cfg_.iterations) {
    const IterationReport rep = step();
    for (std::size_t k = 0; k < 3; ++k) acc[k] += rep.losses[k];
    ++count;
    if (done_ % interval == 0 || done_ == cfg_.iterations) {
      const auto now = std::chrono::steady_clock::now();
      TrainReport::Interval iv;
      iv.end_iteration = done_;
      for (std::size_t k = 0; k < 3; ++k) iv.mean_losses[k] = acc[k] / count;
      iv.seconds = std::chrono::duration<double>(now - start).count();
      report_.intervals.push_back(iv);
      if (log && cfg_.log_interval > 0)
        *log << "iter=" << done_ << " loss_l=" << iv.mean_losses[0] << " loss_s=" << iv.mean_losses[1]
             << " loss_r=" << iv.mean_losses[2] << '\n';
      acc = {};
      count = 0;
      if (on_interval) on_interval(*this);
      start = std::chrono::steady_clock::now();
    }
  }
}

TrainResult train_loop(const Tensor& dataset, const DenoiserConfig& config, const TrainConfig& cfg,
                       const NoiseSchedule& sched, std::ostream* log) {
  if (dataset.size() == 0 || dataset.rows() == 0) throw std::invalid_argument("train_loop: empty dataset");
  Trainer trainer(SupernetParams::initialize(config, derive_seed(cfg.seed, 0)), dataset, cfg, sched);
  trainer.run(log);
  return {trainer.ema(), trainer.params(), trainer.report()};
}

}  // namespace stepwidth
