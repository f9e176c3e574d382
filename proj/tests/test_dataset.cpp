// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stepwidth/dataset.hpp"

using namespace stepwidth;

namespace {

double raw_scale() { return std::sqrt(kGauss8Radius * kGauss8Radius / 2.0 + kGauss8Std * kGauss8Std); }

}  // namespace

TEST_CASE("dataset kinds parse and print") {
  for (DatasetKind k : {DatasetKind::gauss8, DatasetKind::two_moons, DatasetKind::swiss_roll})
    CHECK(parse_dataset_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_dataset_kind("checkerboard"), std::invalid_argument);
  CHECK_THROWS(synth_dataset(DatasetKind::gauss8, 0, 1));
}

TEST_CASE("gauss8 is seeded and its modes lie on the circle") {
  const Tensor a = synth_dataset(DatasetKind::gauss8, 1000, 9);
  CHECK(a == synth_dataset(DatasetKind::gauss8, 1000, 9));
  CHECK_FALSE(a == synth_dataset(DatasetKind::gauss8, 1000, 10));
  CHECK(a.shape() == Shape{1000, 2});

  const std::size_t n = 100000;
  const Tensor x = synth_dataset(DatasetKind::gauss8, n, 3);
  const double s = raw_scale();
  std::vector<std::size_t> counts(8, 0);
  std::vector<double> sum_x(8, 0.0), sum_y(8, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double px = x(i, 0) * s, py = x(i, 1) * s;
    double angle = std::atan2(py, px);
    if (angle < 0) angle += 2 * std::numbers::pi;
    const auto mode = static_cast<std::size_t>(std::lround(angle / (2 * std::numbers::pi / 8))) % 8;
    ++counts[mode];
    sum_x[mode] += px;
    sum_y[mode] += py;
  }
  const double p = 1.0 / 8, sigma = std::sqrt(n * p * (1 - p));
  for (std::size_t m = 0; m < 8; ++m) {
    CHECK(std::abs(counts[m] - n * p) <= 3 * sigma);
    const double angle = 2 * std::numbers::pi * m / 8;
    CHECK(sum_x[m] / counts[m] == doctest::Approx(kGauss8Radius * std::cos(angle)).epsilon(0.01).scale(1.0));
    CHECK(sum_y[m] / counts[m] == doctest::Approx(kGauss8Radius * std::sin(angle)).epsilon(0.01).scale(1.0));
  }
}

TEST_CASE("every kind is standardized") {
  const std::size_t n = 200000;
  for (DatasetKind k : {DatasetKind::gauss8, DatasetKind::two_moons, DatasetKind::swiss_roll}) {
    const Tensor x = synth_dataset(k, n, 4);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0, v = 0;
      for (std::size_t i = 0; i < n; ++i) m += x(i, c);
      m /= n;
      for (std::size_t i = 0; i < n; ++i) v += (x(i, c) - m) * (x(i, c) - m);
      v /= n;
      INFO(to_string(k) << " column " << c);
      CHECK(std::abs(m) < 0.02);
      CHECK(std::abs(v - 1.0) < 0.03);
    }
  }
}
