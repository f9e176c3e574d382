// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "stepwidth/dataset.hpp"
#include "stepwidth/schedule.hpp"

using namespace stepwidth;

TEST_CASE("small schedules have the hand-computed cumulative products") {
  const NoiseSchedule one({0.5});
  CHECK(one.alpha_bar(1) == 0.5);
  const NoiseSchedule two({0.1, 0.2});
  CHECK(two.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(two.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
  CHECK(two.alpha_bar(0) == 1.0);
}

TEST_CASE("linear schedule endpoints and the long-chain cumulative product") {
  const NoiseSchedule s = build_linear_schedule(1000, 1e-4, 0.02);
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(1000) == doctest::Approx(0.02).epsilon(1e-15));
  // Independent oracle: product of (1 - beta) with beta recomputed from the endpoints.
  long double prod = 1.0L;
  for (int i = 0; i < 1000; ++i) prod *= 1.0L - (1e-4L + (0.02L - 1e-4L) * i / 999.0L);
  CHECK(s.alpha_bar(1000) == doctest::Approx(static_cast<double>(prod)).epsilon(1e-10));
  CHECK(s.alpha_bar(1000) == doctest::Approx(4.0e-5).epsilon(0.02));
}

TEST_CASE("schedule invariants hold for random linear schedules") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const int T = 1 + static_cast<int>(rng() % 300);
    const NoiseSchedule s = build_linear_schedule(T, a, b);
    for (int t = 1; t <= T; ++t) {
      CHECK(s.beta(t) > 0.0);
      CHECK(s.beta(t) < 1.0);
      CHECK(std::abs(s.alpha_bar(t) / s.alpha_bar(t - 1) - s.alpha(t)) <= 1e-12);
      CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
      CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
  }
}

TEST_CASE("schedule arguments are validated") {
  CHECK_THROWS(build_linear_schedule(0, 0.1, 0.2));
  CHECK_THROWS(build_linear_schedule(10, 0.3, 0.2));
  CHECK_THROWS(build_linear_schedule(10, 0.0, 0.2));
  CHECK_THROWS(build_linear_schedule(10, 0.1, 1.0));
  CHECK_THROWS(NoiseSchedule({0.2, 1.5}));
  CHECK_THROWS_AS(build_linear_schedule(5, 0.1, 0.2).check_step(6), std::out_of_range);
}

TEST_CASE("forward diffusion limits and scalar value") {
  const Tensor x0 = Tensor::matrix({{1.0, -2.0}}), eps = Tensor::matrix({{0.5, 0.25}});
  const NoiseSchedule tiny({1e-300});
  CHECK(forward_diffuse(x0, 1, eps, tiny) == x0);
  const NoiseSchedule two({0.1, 0.2});
  const Tensor x = forward_diffuse(Tensor::matrix({{1.0}}), 2, Tensor::matrix({{0.5}}), two);
  CHECK(x[0] == doctest::Approx(std::sqrt(0.72) + std::sqrt(0.28) * 0.5).epsilon(1e-14));
  CHECK(x[0] == doctest::Approx(1.1131).epsilon(1e-4));
  CHECK_THROWS_AS(forward_diffuse(x0, 3, eps, two), std::out_of_range);
  CHECK_THROWS_AS(forward_diffuse(x0, 1, Tensor::matrix({{1.0}}), two), ShapeError);
}

TEST_CASE("forward diffusion at the last step approaches a standard normal") {
  const NoiseSchedule s = build_linear_schedule(1000, 1e-4, 0.02);
  const std::size_t n = 100000;
  const Tensor x0 = synth_dataset(DatasetKind::gauss8, n, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Tensor eps(x0.shape());
  for (double& v : eps.data()) v = normal(rng);
  const Tensor xt = forward_diffuse(x0, 1000, eps, s);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < n; ++r) m += xt(r, c);
    m /= n;
    for (std::size_t r = 0; r < n; ++r) v += (xt(r, c) - m) * (xt(r, c) - m);
    v /= n;
    CHECK(std::abs(m) < 0.05);
    CHECK(std::abs(v - 1.0) < 0.05);
  }
}

TEST_CASE("ddpm reverse step") {
  const NoiseSchedule two({0.1, 0.2});
  const Tensor x = Tensor::matrix({{1.0}}), zero = Tensor::matrix({{0.0}});
  const Tensor out = ddpm_reverse_step(x, 2, Tensor::matrix({{0.5}}), two, zero);
  const double oracle = (1.0 - 0.2 * 0.5 / std::sqrt(0.28)) / std::sqrt(0.8);
  CHECK(std::abs(out[0] - oracle) <= 1e-12);
  CHECK(out[0] == doctest::Approx(0.9068).epsilon(1e-4));
  CHECK(ddpm_reverse_step(x, 2, zero, two, zero)[0] == doctest::Approx(1.0 / std::sqrt(0.8)).epsilon(1e-15));

  const Tensor z = Tensor::matrix({{2.0}});
  CHECK(ddpm_reverse_step(x, 2, zero, two, z)[0] ==
        doctest::Approx(1.0 / std::sqrt(0.8) + std::sqrt(0.2) * 2.0).epsilon(1e-14));
  CHECK(ddpm_reverse_step(x, 1, zero, two, z) == ddpm_reverse_step(x, 1, zero, two, zero));
  CHECK_THROWS_AS(ddpm_reverse_step(x, 0, zero, two, zero), std::out_of_range);
}

TEST_CASE("ddpm reverse step matches the scalar mean formula on random inputs") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  const NoiseSchedule s = build_linear_schedule(50, 1e-3, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 50);
    const double xv = normal(rng), ev = normal(rng);
    const double mu = (xv - s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t)) * ev) / std::sqrt(s.alpha(t));
    const Tensor out = ddpm_reverse_step(Tensor::matrix({{xv}}), t, Tensor::matrix({{ev}}), s, Tensor::matrix({{0.0}}));
    CHECK(std::abs(out[0] - mu) <= 1e-12);
  }
}

TEST_CASE("ddim reverse step") {
  const NoiseSchedule two({0.1, 0.2});
  const Tensor x = Tensor::matrix({{1.0}}), zero = Tensor::matrix({{0.0}}), eh = Tensor::matrix({{0.5}});
  const double x0_pred = (1.0 - std::sqrt(0.28) * 0.5) / std::sqrt(0.72);
  const double oracle = std::sqrt(0.9) * x0_pred + std::sqrt(0.1) * 0.5;
  CHECK(ddim_reverse_step(x, 2, 1, eh, 0.0, two, zero)[0] == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(ddim_reverse_step(x, 2, 1, eh, 0.0, two, zero)[0] == doctest::Approx(0.9803).epsilon(1e-4));
  CHECK(ddim_reverse_step(x, 2, 1, zero, 0.0, two, zero)[0] ==
        doctest::Approx(std::sqrt(0.9 / 0.72)).epsilon(1e-14));

  const NoiseSchedule flat({0.1, 1e-300});
  CHECK(ddim_reverse_step(x, 2, 1, eh, 0.0, flat, zero)[0] == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(ddim_reverse_step(x, 1, 1, eh, 0.0, two, zero), std::invalid_argument);
  CHECK_THROWS_AS(ddim_reverse_step(x, 2, 1, eh, -0.1, two, zero), std::invalid_argument);
  CHECK_THROWS_AS(ddim_reverse_step(x, 2, 1, eh, 5.0, two, zero), std::domain_error);
  CHECK(ddim_sigma(2, 1, 0.0, two) == 0.0);
  CHECK(ddim_sigma(2, 1, 1.0, two) ==
        doctest::Approx(std::sqrt(0.1 / 0.28) * std::sqrt(1.0 - 0.72 / 0.9)).epsilon(1e-14));
}

TEST_CASE("respacing rule") {
  CHECK(respace(7, 7) == TimestepSpacing::full(7));
  CHECK(respace(7, 1).steps() == std::vector<int>{1});
  CHECK(respace(1000, 10).steps() == std::vector<int>{1, 101, 201, 301, 401, 501, 601, 701, 801, 901});
  for (int n : {3, 10, 17, 50, 333, 1000}) {
    const TimestepSpacing s = respace(1000, n);
    CHECK(s.size() == static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == static_cast<int>(i * 1000 / n) + 1);
  }
  CHECK_THROWS(respace(10, 0));
  CHECK_THROWS(respace(10, 11));
  CHECK_THROWS(TimestepSpacing({3, 2}, 5));
  CHECK_THROWS(TimestepSpacing({}, 5));
  CHECK_THROWS(TimestepSpacing({1, 6}, 5));
}

TEST_CASE("respaced schedule keeps the cumulative products of the visited steps") {
  const NoiseSchedule s = build_linear_schedule(100, 1e-4, 0.05);
  const TimestepSpacing sp = respace(100, 9);
  const NoiseSchedule r = respaced_schedule(s, sp);
  CHECK(r.steps() == 9);
  for (std::size_t i = 0; i < sp.size(); ++i)
    CHECK(r.alpha_bar(static_cast<int>(i) + 1) == doctest::Approx(s.alpha_bar(sp[i])).epsilon(1e-12));
  const NoiseSchedule same = respaced_schedule(s, TimestepSpacing::full(100));
  for (int t = 1; t <= 100; ++t) CHECK(same.beta(t) == doctest::Approx(s.beta(t)).epsilon(1e-10));
}
