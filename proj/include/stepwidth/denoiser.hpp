// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepwidth/autodiff.hpp"
#include "stepwidth/tensor.hpp"

namespace stepwidth {

/// Fraction k/8 of the maximum hidden width, k in 2..8.
struct WidthRatio {
  static constexpr int kDenominator = 8;
  static constexpr int kMinEighths = 2;

  int eighths = kDenominator;

  constexpr double value() const { return static_cast<double>(eighths) / kDenominator; }
  std::string to_string() const;

  /// Accepts "k/8" or a bare numerator "k".
  static WidthRatio parse(std::string_view text);
  static WidthRatio checked(int eighths);
  static constexpr WidthRatio full() { return WidthRatio{kDenominator}; }

  auto operator<=>(const WidthRatio&) const = default;
};

/// All seven ratios 2/8 .. 8/8.
std::vector<WidthRatio> all_width_ratios();

/// round(ratio * max_dim); throws if the slice would be empty.
std::size_t sliced_dim(WidthRatio ratio, std::size_t max_dim);

struct DenoiserConfig {
  std::size_t data_dim = 2;
  std::size_t hidden_width = 64;
  std::size_t depth = 2;
  std::size_t time_embed_dim = 16;
  std::vector<WidthRatio> allowed_widths = all_width_ratios();

  /// Throws std::invalid_argument on any broken invariant.
  void validate() const;
  bool allows(WidthRatio w) const;
  void require_allowed(WidthRatio w) const;
  WidthRatio min_width() const { return allowed_widths.front(); }
  WidthRatio max_width() const { return allowed_widths.back(); }
  std::size_t hidden_at(WidthRatio w) const { return sliced_dim(w, hidden_width); }

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Array shapes of the network with `hidden` units per hidden layer.
std::vector<Shape> layer_shapes(const DenoiserConfig& config, std::size_t hidden);

/// Full-width weights of the slimmable denoiser. Every sub-network reads
/// leading slices of these same arrays.
///
/// Layout (weights are out x in):
///   input.weight [H x D], input.bias [H],
///   per layer l: hidden.l.weight [H x H], hidden.l.bias [H],
///                time.l.weight [H x E], time.l.bias [H],
///   output.weight [D x H], output.bias [D].
struct SupernetParams {
  DenoiserConfig config;
  std::vector<Tensor> tensors;

  static SupernetParams initialize(const DenoiserConfig& config, std::uint64_t seed);

  static std::size_t array_count(std::size_t depth) { return 4 + 4 * depth; }
  static std::size_t hidden_weight(std::size_t layer) { return 2 + 4 * layer; }
  static std::size_t hidden_bias(std::size_t layer) { return 3 + 4 * layer; }
  static std::size_t time_weight(std::size_t layer) { return 4 + 4 * layer; }
  static std::size_t time_bias(std::size_t layer) { return 5 + 4 * layer; }
  std::size_t output_weight() const { return 2 + 4 * config.depth; }
  std::size_t output_bias() const { return 3 + 4 * config.depth; }

  std::vector<std::string> array_names() const;
  std::vector<Shape> expected_shapes() const;
  /// Throws if tensor count or shapes disagree with the config.
  void validate() const;
};

/// Parameters active at `width`.
std::size_t param_count(const DenoiserConfig& config, WidthRatio width);

/// Standalone (non-slimmable) network with compact arrays, same layout.
struct DenseNetwork {
  std::size_t data_dim = 0;
  std::size_t hidden_width = 0;
  std::size_t depth = 0;
  std::size_t time_embed_dim = 0;
  std::vector<Tensor> tensors;
};

/// [sin(t w_i)]_i ++ [cos(t w_i)]_i with w_i = 10000^(-2i/dim), as a 1 x dim row.
Tensor time_embedding(int t, std::size_t dim);

/// Affine map restricted to the leading out_ratio rows and in_ratio columns of W.
Tensor slimmable_affine_forward(const Tensor& w, const Tensor& b, WidthRatio in_ratio, WidthRatio out_ratio,
                                const Tensor& x);

/// Predicted noise for a batch x_t (n x D) at a single step t, using the
/// sub-network selected by `width`.
Tensor denoiser_forward(const SupernetParams& net, WidthRatio width, const Tensor& x_t, int t);

DenseNetwork extract_subnetwork(const SupernetParams& net, WidthRatio width);

Tensor dense_forward(const DenseNetwork& net, const Tensor& x_t, int t);

/// Differentiable forward with a per-row timestep. `params` are graph nodes
/// for the full-width arrays, in SupernetParams order.
Var denoiser_graph(Graph& g, std::span<const Var> params, const DenoiserConfig& config, WidthRatio width,
                   const Tensor& x_t, const std::vector<int>& t);

}  // namespace stepwidth
