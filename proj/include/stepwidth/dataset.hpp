// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "stepwidth/tensor.hpp"

namespace stepwidth {

enum class DatasetKind { gauss8, two_moons, swiss_roll };

DatasetKind parse_dataset_kind(std::string_view name);
std::string to_string(DatasetKind kind);

/// Mixture geometry of gauss8 before standardization.
inline constexpr double kGauss8Radius = 1.0;
inline constexpr double kGauss8Std = 0.1;

/// n x 2 points, standardized with the generating distribution's exact
/// per-coordinate mean and standard deviation.
Tensor synth_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed);

}  // namespace stepwidth
