// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "stepwidth/kernels.hpp"

namespace stepwidth {

Sampler Sampler::parse(std::string_view name, double eta) {
  if (name == "ddpm") return ddpm();
  if (name == "ddim") {
    if (eta < 0.0) throw std::invalid_argument("ddim eta must be >= 0");
    return ddim(eta);
  }
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (expected ddpm or ddim)");
}

void check_strategy_alignment(const Strategy& strategy, const TimestepSpacing& spacing) {
  if (strategy.size() != spacing.size())
    throw StaleStrategyError("strategy has " + std::to_string(strategy.size()) + " steps but the sampling spacing has " +
                             std::to_string(spacing.size()) + "; the strategy was searched for a different spacing");
}

Tensor run_sampler(const NoisePredictor& predict, const NoiseSchedule& sched, const Sampler& sampler,
                   const TimestepSpacing& spacing, std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  if (spacing.total_steps() != sched.steps())
    throw std::invalid_argument("spacing is for T=" + std::to_string(spacing.total_steps()) + " but the schedule has T=" +
                                std::to_string(sched.steps()));
  if (sampler.kind == Sampler::Kind::ddim && sampler.eta < 0.0) throw std::invalid_argument("ddim eta must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Tensor z({n, dim});
    for (double& v : z.data()) v = normal(rng);
    return z;
  };

  // DDPM on a subsequence runs on the respaced chain; on the full chain the
  // original schedule is used directly.
  const bool respaced = sampler.kind == Sampler::Kind::ddpm && !spacing.is_full();
  const NoiseSchedule chain = respaced ? respaced_schedule(sched, spacing) : sched;

  Tensor x = draw();
  const Tensor no_noise;
  for (std::size_t pos = spacing.size(); pos-- > 0;) {
    const int t = spacing[pos];
    const Tensor eps = predict(x, t, pos);
    if (sampler.kind == Sampler::Kind::ddpm) {
      const int chain_t = respaced ? static_cast<int>(pos) + 1 : t;
      x = ddpm_reverse_step(x, chain_t, eps, chain, chain_t > 1 ? draw() : no_noise);
    } else {
      const int t_prev = pos > 0 ? spacing[pos - 1] : 0;
      const bool noisy = sampler.eta > 0.0 && ddim_sigma(t, t_prev, sampler.eta, sched) > 0.0;
      x = ddim_reverse_step(x, t, t_prev, eps, sampler.eta, sched, noisy ? draw() : no_noise);
    }
  }
  return x;
}

Tensor generate_with_strategy(const SupernetParams& net, const NoiseSchedule& sched, const Strategy& strategy,
                              const Sampler& sampler, const TimestepSpacing& spacing, std::size_t n,
                              std::uint64_t seed) {
  check_strategy_alignment(strategy, spacing);
  for (WidthRatio w : strategy.widths) net.config.require_allowed(w);
  return run_sampler(
      [&](const Tensor& x, int t, std::size_t pos) { return denoiser_forward(net, strategy[pos], x, t); }, sched,
      sampler, spacing, n, net.config.data_dim, seed);
}

Tensor generate_baseline(const DenseNetwork& net, const NoiseSchedule& sched, const Sampler& sampler,
                         const TimestepSpacing& spacing, std::size_t n, std::uint64_t seed) {
  return run_sampler([&](const Tensor& x, int t, std::size_t) { return dense_forward(net, x, t); }, sched, sampler,
                     spacing, n, net.data_dim, seed);
}

double median_pairwise_distance(const Tensor& points) {
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) throw std::invalid_argument("median pairwise distance needs at least two points");
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = points(i, k) - points(j, k);
        s += diff * diff;
      }
      dist.push_back(std::sqrt(s));
    }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  const double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), dist.begin() + mid);
  return 0.5 * (lower + upper);
}

namespace {

double pair_sum(const Tensor& a, const Tensor& b, double inv_two_h2) {
  return kernels::rbf_pair_sum(a.ptr(), a.rows(), b.ptr(), b.rows(), a.cols(), inv_two_h2);
}

// Fixed operand order for the cross term so that mmd(a, b) == mmd(b, a) bitwise.
bool canonical_first(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  return !std::lexicographical_compare(b.data().begin(), b.data().end(), a.data().begin(), a.data().end());
}

void check_batch(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.rows() == 0) throw std::invalid_argument(std::string("mmd: ") + what + " batch is empty");
}

}  // namespace

MmdReference::MmdReference(Tensor reference, double bandwidth) : reference_(std::move(reference)), bandwidth_(bandwidth) {
  check_batch(reference_, "reference");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw std::invalid_argument("mmd bandwidth must be positive and finite");
  self_term_ = pair_sum(reference_, reference_, 1.0 / (2.0 * bandwidth_ * bandwidth_)) /
               (static_cast<double>(reference_.rows()) * static_cast<double>(reference_.rows()));
}

double MmdReference::score(const Tensor& samples) const {
  check_batch(samples, "sample");
  if (samples.cols() != reference_.cols())
    throw ShapeError("mmd: sample dim " + std::to_string(samples.cols()) + " vs reference dim " +
                     std::to_string(reference_.cols()));
  const double c = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  const double n = static_cast<double>(samples.rows());
  const double m = static_cast<double>(reference_.rows());
  const double self_samples = pair_sum(samples, samples, c) / (n * n);
  const double cross = canonical_first(samples, reference_) ? pair_sum(samples, reference_, c)
                                                            : pair_sum(reference_, samples, c);
  const double value = self_samples + self_term_ - 2.0 * cross / (n * m);
  return std::max(0.0, value);
}

QualityScore mmd_quality(const Tensor& samples, const Tensor& reference, std::optional<double> bandwidth) {
  check_batch(samples, "sample");
  check_batch(reference, "reference");
  if (samples.cols() != reference.cols())
    throw ShapeError("mmd: sample dim " + std::to_string(samples.cols()) + " vs reference dim " +
                     std::to_string(reference.cols()));
  double h = 0.0;
  if (bandwidth) {
    h = *bandwidth;
  } else {
    Tensor pooled({samples.rows() + reference.rows(), samples.cols()});
    std::copy(samples.data().begin(), samples.data().end(), pooled.data().begin());
    std::copy(reference.data().begin(), reference.data().end(), pooled.data().begin() + samples.size());
    h = median_pairwise_distance(pooled);
  }
  if (!(h > 0.0)) throw std::invalid_argument("mmd bandwidth must be positive, got " + std::to_string(h));
  const MmdReference ref(reference, h);
  return QualityScore{ref.score(samples), "mmd2_rbf", samples.rows(), 0};
}

FlopCount flops_per_step(const DenoiserConfig& config, WidthRatio width) {
  config.require_allowed(width);
  const FlopCount h = config.hidden_at(width), d = config.data_dim, e = config.time_embed_dim;
  auto affine = [](FlopCount m, FlopCount n) { return 2 * m * n + n; };
  FlopCount total = affine(d, h);
  for (std::size_t l = 0; l < config.depth; ++l) total += affine(e, h) + affine(h, h) + 3 * h;
  return total + affine(h, d);
}

FlopsReport strategy_flops(const DenoiserConfig& config, const Strategy& strategy, const TimestepSpacing& spacing) {
  check_strategy_alignment(strategy, spacing);
  FlopsReport r;
  r.per_step.reserve(strategy.size());
  for (WidthRatio w : strategy.widths) {
    r.per_step.push_back(flops_per_step(config, w));
    r.total += r.per_step.back();
  }
  r.average = static_cast<double>(r.total) / static_cast<double>(r.per_step.size());
  return r;
}

StrategyEvaluation evaluate_strategy(const SupernetParams& net, const NoiseSchedule& sched, const Strategy& strategy,
                                     const Sampler& sampler, const TimestepSpacing& spacing, const Tensor& reference,
                                     std::size_t n, std::uint64_t seed, std::optional<double> bandwidth) {
  FlopsReport flops = strategy_flops(net.config, strategy, spacing);
  const Tensor samples = generate_with_strategy(net, sched, strategy, sampler, spacing, n, seed);
  QualityScore q = mmd_quality(samples, reference, bandwidth);
  q.seed = seed;
  return {q, std::move(flops)};
}

std::string evaluation_csv_header() { return "strategy_id,quality,avg_flops,total_flops,seed"; }

std::string evaluation_csv_row(std::string_view strategy_id, const StrategyEvaluation& eval) {
  std::ostringstream out;
  out.precision(17);
  if (strategy_id.find_first_of(",\"\n") == std::string_view::npos) {
    out << strategy_id;
  } else {
    out << '"';
    for (char ch : strategy_id) out << (ch == '"' ? "\"\"" : std::string(1, ch));
    out << '"';
  }
  out << ',' << eval.quality.value << ',' << eval.flops.average << ',' << eval.flops.total << ','
      << eval.quality.seed;
  return out.str();
}

}  // namespace stepwidth
