// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "flop_counter.hpp"
#include "stepwidth/evaluation.hpp"

using namespace stepwidth;
using namespace stepwidth::testing;

namespace {

Tensor normal_batch(std::size_t n, double mean, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(mean, 1.0);
  Tensor t({n, 1});
  for (double& v : t.data()) v = normal(rng);
  return t;
}

const NoiseSchedule kSched = build_linear_schedule(50, 1e-3, 0.1);

}  // namespace

TEST_CASE("counting oracle: a 4 to 3 affine costs 27") {
  g_count = {};
  const Tensor w({3, 4}, 0.5), b({3}, 1.0);
  counted_affine(std::vector<Counted>(4, Counted{1.0}), w, b, 4, 3);
  CHECK(g_count.total() == 27);
}

TEST_CASE("analytic FLOPs equal the instrumented count at every width") {
  for (std::size_t depth : {1, 2, 3}) {
    DenoiserConfig c;
    c.depth = depth;
    c.hidden_width = 32;
    const SupernetParams net = SupernetParams::initialize(c, depth);
    const Tensor x = Tensor::matrix({{0.3, -0.8}});
    for (WidthRatio w : c.allowed_widths) {
      g_count = {};
      const auto y = counted_forward(net, w, x, 17);
      const Tensor ref = denoiser_forward(net, w, x, 17);
      // Same arithmetic as the production forward, so the count applies to it.
      CHECK(y[0].v == ref[0]);
      CHECK(y[1].v == ref[1]);
      CHECK(g_count.total() == flops_per_step(c, w));
    }
  }
}

TEST_CASE("FLOPs are monotone in width and the full width equals the dense count") {
  const DenoiserConfig c;
  const auto widths = all_width_ratios();
  for (std::size_t i = 1; i < widths.size(); ++i) CHECK(flops_per_step(c, widths[i - 1]) < flops_per_step(c, widths[i]));
  const FlopCount h = c.hidden_width, d = c.data_dim, e = c.time_embed_dim;
  CHECK(flops_per_step(c, WidthRatio::full()) ==
        (2 * d * h + h) + c.depth * ((2 * e * h + h) + (2 * h * h + h) + 3 * h) + (2 * h * d + d));
}

TEST_CASE("strategy FLOPs reports") {
  const DenoiserConfig c;
  const TimestepSpacing full = TimestepSpacing::full(40);
  const FlopsReport uni = strategy_flops(c, uniform_strategy(WidthRatio{5}, 40), full);
  CHECK(uni.average == static_cast<double>(flops_per_step(c, WidthRatio{5})));
  CHECK(uni.total == 40 * flops_per_step(c, WidthRatio{5}));

  Strategy half = uniform_strategy(WidthRatio{2}, 40);
  for (std::size_t i = 20; i < 40; ++i) half.widths[i] = WidthRatio{8};
  CHECK(strategy_flops(c, half, full).average ==
        (flops_per_step(c, WidthRatio{2}) + flops_per_step(c, WidthRatio{8})) / 2.0);

  const Strategy pilot_c = make_range_strategy(WidthRatio{8}, WidthRatio{2}, {{20, 30}}, 40);
  CHECK(strategy_flops(c, pilot_c, full).average ==
        doctest::Approx(0.75 * flops_per_step(c, WidthRatio{8}) + 0.25 * flops_per_step(c, WidthRatio{2})).epsilon(1e-15));

  CHECK_THROWS_AS(strategy_flops(c, uniform_strategy(WidthRatio{8}, 39), full), StaleStrategyError);
}

TEST_CASE("pointwise-wider strategies never cost less") {
  const DenoiserConfig c;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> k(2, 8);
  const TimestepSpacing full = TimestepSpacing::full(25);
  for (int trial = 0; trial < 200; ++trial) {
    Strategy a = uniform_strategy(WidthRatio{2}, 25), b = a;
    for (std::size_t i = 0; i < 25; ++i) {
      a.widths[i] = WidthRatio{k(rng)};
      b.widths[i] = WidthRatio{std::max(a.widths[i].eighths, k(rng))};
    }
    CHECK(strategy_flops(c, a, full).average <= strategy_flops(c, b, full).average);
  }
}

TEST_CASE("MMD on hand examples") {
  const Tensor x = Tensor::matrix({{0.0}}), y = Tensor::matrix({{1.0}});
  CHECK(mmd_quality(x, y, 1.0).value == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-15));
  CHECK(mmd_quality(x, y, 1.0).value == doctest::Approx(0.7869).epsilon(1e-4));
  const Tensor s = Tensor::matrix({{1, 2}, {3, 4}, {-1, 0.5}});
  const Tensor shuffled = Tensor::matrix({{-1, 0.5}, {1, 2}, {3, 4}});
  CHECK(mmd_quality(s, shuffled).value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS(mmd_quality(s, Tensor::matrix({{1.0}})));
  CHECK_THROWS(mmd_quality(s, s, 0.0));
  CHECK_THROWS(MmdReference(s, -1.0));
}

TEST_CASE("MMD is symmetric and nonnegative") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = normal_batch(10 + trial, 0.0, rng), b = normal_batch(30 - trial % 7, 0.3, rng);
    const double ab = mmd_quality(a, b, 0.7).value, ba = mmd_quality(b, a, 0.7).value;
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(mmd_quality(a, b).value == mmd_quality(b, a).value);
  }
}

TEST_CASE("MMD separates shifted Gaussians on every resampling") {
  std::mt19937_64 rng(99);
  int separated = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor ref = normal_batch(1000, 0.0, rng);
    const Tensor same = normal_batch(1000, 0.0, rng), far = normal_batch(1000, 5.0, rng);
    if (mmd_quality(far, ref).value > mmd_quality(same, ref).value) ++separated;
  }
  CHECK(separated == 100);
}

TEST_CASE("all-max strategy sampling equals the strategy-free sampler") {
  const SupernetParams net = SupernetParams::initialize(DenoiserConfig{}, 3);
  const DenseNetwork dense = extract_subnetwork(net, WidthRatio::full());
  for (const Sampler& sampler : {Sampler::ddpm(), Sampler::ddim(0.0), Sampler::ddim(0.5)}) {
    for (const TimestepSpacing& sp : {TimestepSpacing::full(50), respace(50, 10)}) {
      const Tensor a = generate_with_strategy(net, kSched, uniform_strategy(WidthRatio::full(), sp.size()), sampler, sp,
                                              64, 21);
      CHECK(a == generate_baseline(dense, kSched, sampler, sp, 64, 21));
    }
  }
}

TEST_CASE("sampling contracts") {
  const SupernetParams net = SupernetParams::initialize(DenoiserConfig{}, 3);
  const TimestepSpacing sp = respace(50, 10);
  const Strategy s = uniform_strategy(WidthRatio{4}, 10);
  CHECK_THROWS(generate_with_strategy(net, kSched, s, Sampler::ddpm(), sp, 0, 1));
  CHECK_THROWS_AS(generate_with_strategy(net, kSched, uniform_strategy(WidthRatio{4}, 11), Sampler::ddpm(), sp, 4, 1),
                  StaleStrategyError);
  CHECK_THROWS(generate_with_strategy(net, kSched, s, Sampler::ddpm(), respace(40, 10), 4, 1));

  const Tensor d1 = generate_with_strategy(net, kSched, s, Sampler::ddim(), sp, 32, 5);
  CHECK(d1 == generate_with_strategy(net, kSched, s, Sampler::ddim(), sp, 32, 5));
  CHECK(d1 != generate_with_strategy(net, kSched, s, Sampler::ddim(), sp, 32, 6));
  CHECK(d1.all_finite());
  CHECK(d1.shape() == Shape{32, 2});
}

TEST_CASE("the four range combinations give four different sample sets") {
  const SupernetParams net = SupernetParams::initialize(DenoiserConfig{}, 3);
  const TimestepSpacing sp = TimestepSpacing::full(40);
  std::vector<Tensor> outs;
  for (std::size_t q = 0; q < 4; ++q) {
    const Strategy s = make_range_strategy(WidthRatio{8}, WidthRatio{2}, {{10 * q, 10 * q + 10}}, 40);
    outs.push_back(generate_with_strategy(net, build_linear_schedule(40, 1e-3, 0.1), s, Sampler::ddpm(), sp, 16, 2));
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(outs[i] != outs[j]);
}

TEST_CASE("strategy evaluation is pure and agrees with the baseline score") {
  const SupernetParams net = SupernetParams::initialize(DenoiserConfig{}, 3);
  const TimestepSpacing sp = TimestepSpacing::full(50);
  std::mt19937_64 rng(1);
  Tensor ref({200, 2});
  std::normal_distribution<double> normal;
  for (double& v : ref.data()) v = normal(rng);

  const Strategy full = uniform_strategy(WidthRatio::full(), 50);
  const StrategyEvaluation a = evaluate_strategy(net, kSched, full, Sampler::ddpm(), sp, ref, 128, 9);
  CHECK(a == evaluate_strategy(net, kSched, full, Sampler::ddpm(), sp, ref, 128, 9));
  const Tensor base = generate_baseline(extract_subnetwork(net, WidthRatio::full()), kSched, Sampler::ddpm(), sp, 128, 9);
  CHECK(a.quality.value == mmd_quality(base, ref).value);
  CHECK(a.quality.seed == 9);
  CHECK(a.quality.sample_count == 128);
  CHECK(a.quality.metric_name == "mmd2_rbf");

  const StrategyEvaluation small =
      evaluate_strategy(net, kSched, uniform_strategy(WidthRatio{2}, 50), Sampler::ddpm(), sp, ref, 128, 9);
  CHECK(small.flops.average == static_cast<double>(flops_per_step(net.config, WidthRatio{2})));

  CHECK(evaluation_csv_header() == "strategy_id,quality,avg_flops,total_flops,seed");
  const std::string row = evaluation_csv_row("s1", a);
  CHECK(row.rfind("s1,", 0) == 0);
  CHECK(row.substr(row.rfind(',') + 1) == "9");
  CHECK(evaluation_csv_row("8,8,2", a).rfind("\"8,8,2\",", 0) == 0);
}

TEST_CASE("sampler names") {
  CHECK(Sampler::parse("ddpm") == Sampler::ddpm());
  CHECK(Sampler::parse("ddim", 0.3) == Sampler::ddim(0.3));
  CHECK_THROWS(Sampler::parse("euler"));
  CHECK_THROWS(Sampler::parse("ddim", -1.0));
}
