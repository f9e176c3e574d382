// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stepwidth/denoiser.hpp"

namespace stepwidth::testing {

// Scalar that counts the arithmetic performed on it.
struct Counter {
  std::uint64_t mul = 0, add = 0, act = 0;
  std::uint64_t total() const { return mul + add + act; }
};
inline Counter g_count;

struct Counted {
  double v = 0.0;
};
inline Counted operator*(Counted a, Counted b) {
  ++g_count.mul;
  return {a.v * b.v};
}
inline Counted operator+(Counted a, Counted b) {
  ++g_count.add;
  return {a.v + b.v};
}
// One activation op per element, whatever its internal arithmetic.
inline Counted silu(Counted a) {
  ++g_count.act;
  return {a.v / (1.0 + std::exp(-a.v))};
}

inline std::vector<Counted> counted_affine(const std::vector<Counted>& x, const Tensor& w, const Tensor& b, std::size_t in,
                                    std::size_t out) {
  std::vector<Counted> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    Counted acc{0.0};
    for (std::size_t i = 0; i < in; ++i) acc = acc + Counted{x[i].v} * Counted{w(o, i)};
    y[o] = acc + Counted{b[o]};
  }
  return y;
}

// One-sample forward of the sliced network on the counting scalar; the time
// embedding is an input, not part of the step's arithmetic.
inline std::vector<Counted> counted_forward(const SupernetParams& net, WidthRatio width, const Tensor& x, int t) {
  const auto& c = net.config;
  const std::size_t h = c.hidden_at(width);
  const Tensor temb = time_embedding(t, c.time_embed_dim);
  std::vector<Counted> in(c.data_dim), e(c.time_embed_dim);
  for (std::size_t i = 0; i < c.data_dim; ++i) in[i] = {x[i]};
  for (std::size_t i = 0; i < c.time_embed_dim; ++i) e[i] = {temb[i]};
  std::vector<Counted> act = counted_affine(in, net.tensors[0], net.tensors[1], c.data_dim, h);
  for (std::size_t l = 0; l < c.depth; ++l) {
    const auto inject = counted_affine(e, net.tensors[SupernetParams::time_weight(l)],
                                       net.tensors[SupernetParams::time_bias(l)], c.time_embed_dim, h);
    auto pre = counted_affine(act, net.tensors[SupernetParams::hidden_weight(l)],
                              net.tensors[SupernetParams::hidden_bias(l)], h, h);
    for (std::size_t i = 0; i < h; ++i) act[i] = act[i] + silu(pre[i] + inject[i]);
  }
  return counted_affine(act, net.tensors[net.output_weight()], net.tensors[net.output_bias()], h, c.data_dim);
}

}  // namespace stepwidth::testing
