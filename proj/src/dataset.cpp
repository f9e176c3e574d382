// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/dataset.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace stepwidth {

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "gauss8") return DatasetKind::gauss8;
  if (name == "two_moons") return DatasetKind::two_moons;
  if (name == "swiss_roll") return DatasetKind::swiss_roll;
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::gauss8: return "gauss8";
    case DatasetKind::two_moons: return "two_moons";
    case DatasetKind::swiss_roll: return "swiss_roll";
  }
  return "unknown";
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMoonNoise = 0.1;
constexpr double kRollNoise = 0.5;
constexpr double kRollBegin = 1.5 * kPi;
constexpr double kRollEnd = 4.5 * kPi;

struct Moments {
  std::array<double, 2> mean;
  std::array<double, 2> stddev;
};

Moments gauss8_moments() {
  // Mode angles are symmetric, so the mean is zero and E[cos^2] = 1/2.
  const double var = kGauss8Radius * kGauss8Radius / 2.0 + kGauss8Std * kGauss8Std;
  return {{0.0, 0.0}, {std::sqrt(var), std::sqrt(var)}};
}

Moments moons_moments() {
  // Upper arc (cos u, sin u), lower arc (1 - cos u, 1/2 - sin u), u ~ U(0, pi).
  const double e_sin = 2.0 / kPi;
  const double mean_x = 0.5;
  const double mean_y = 0.25;
  const double ex2 = 0.5 * 0.5 + 0.5 * 1.5;
  const double ey2 = 0.5 * 0.5 + 0.5 * (0.25 - e_sin + 0.5);
  const double noise = kMoonNoise * kMoonNoise;
  return {{mean_x, mean_y}, {std::sqrt(ex2 - mean_x * mean_x + noise), std::sqrt(ey2 - mean_y * mean_y + noise)}};
}

Moments roll_moments() {
  // (u cos u, u sin u) with u ~ U(a, b): moments by composite Simpson.
  constexpr int intervals = 20000;
  const double h = (kRollEnd - kRollBegin) / intervals;
  double sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i <= intervals; ++i) {
    const double u = kRollBegin + i * h;
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double x = u * std::cos(u), y = u * std::sin(u);
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    syy += w * y * y;
  }
  const double norm = h / 3.0 / (kRollEnd - kRollBegin);
  const double mx = sx * norm, my = sy * norm;
  const double noise = kRollNoise * kRollNoise;
  return {{mx, my}, {std::sqrt(sxx * norm - mx * mx + noise), std::sqrt(syy * norm - my * my + noise)}};
}

}  // namespace

Tensor synth_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor out({n, 2});
  Moments mom{};
  switch (kind) {
    case DatasetKind::gauss8: {
      mom = gauss8_moments();
      std::uniform_int_distribution<int> mode(0, 7);
      for (std::size_t i = 0; i < n; ++i) {
        const double angle = 2.0 * kPi * mode(rng) / 8.0;
        out(i, 0) = kGauss8Radius * std::cos(angle) + kGauss8Std * normal(rng);
        out(i, 1) = kGauss8Radius * std::sin(angle) + kGauss8Std * normal(rng);
      }
      break;
    }
    case DatasetKind::two_moons: {
      mom = moons_moments();
      for (std::size_t i = 0; i < n; ++i) {
        const bool upper = unit(rng) < 0.5;
        const double u = kPi * unit(rng);
        const double x = upper ? std::cos(u) : 1.0 - std::cos(u);
        const double y = upper ? std::sin(u) : 0.5 - std::sin(u);
        out(i, 0) = x + kMoonNoise * normal(rng);
        out(i, 1) = y + kMoonNoise * normal(rng);
      }
      break;
    }
    case DatasetKind::swiss_roll: {
      mom = roll_moments();
      std::uniform_real_distribution<double> along(kRollBegin, kRollEnd);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = along(rng);
        out(i, 0) = u * std::cos(u) + kRollNoise * normal(rng);
        out(i, 1) = u * std::sin(u) + kRollNoise * normal(rng);
      }
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c) out(i, c) = (out(i, c) - mom.mean[c]) / mom.stddev[c];
  return out;
}

}  // namespace stepwidth
