// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepwidth/denoiser.hpp"
#include "stepwidth/schedule.hpp"

namespace stepwidth {

/// Malformed, truncated, corrupted or wrong-version checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

struct ScheduleParams {
  int steps = 50;
  double beta_start = 1e-3;
  double beta_end = 0.1;

  NoiseSchedule build() const { return build_linear_schedule(steps, beta_start, beta_end); }
  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

struct CheckpointMeta {
  std::uint64_t train_seed = 0;
  int iterations = 0;
  std::string dataset = "gauss8";
  std::size_t dataset_size = 0;
  std::uint64_t dataset_seed = 0;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  SupernetParams net;
  ScheduleParams schedule;
  CheckpointMeta meta;
};

/// Container: 8-byte little-endian manifest length, UTF-8 JSON manifest,
/// little-endian float64 arrays, then a CRC-32 of every preceding byte.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stepwidth
