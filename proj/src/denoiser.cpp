// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/denoiser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>

#include "stepwidth/kernels.hpp"

namespace stepwidth {

std::string WidthRatio::to_string() const { return std::to_string(eighths) + "/8"; }

WidthRatio WidthRatio::checked(int eighths) {
  if (eighths < kMinEighths || eighths > kDenominator)
    throw std::invalid_argument("width ratio " + std::to_string(eighths) + "/8 outside 2/8..8/8");
  return WidthRatio{eighths};
}

WidthRatio WidthRatio::parse(std::string_view text) {
  std::string_view num = text;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    if (text.substr(slash + 1) != "8") throw std::invalid_argument("width ratio must be k/8, got '" + std::string(text) + "'");
    num = text.substr(0, slash);
  }
  int k = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
  if (ec != std::errc() || ptr != num.data() + num.size())
    throw std::invalid_argument("cannot parse width ratio '" + std::string(text) + "'");
  return checked(k);
}

std::vector<WidthRatio> all_width_ratios() {
  std::vector<WidthRatio> out;
  for (int k = WidthRatio::kMinEighths; k <= WidthRatio::kDenominator; ++k) out.push_back(WidthRatio{k});
  return out;
}

std::size_t sliced_dim(WidthRatio ratio, std::size_t max_dim) {
  if (ratio.eighths < WidthRatio::kMinEighths || ratio.eighths > WidthRatio::kDenominator)
    throw std::invalid_argument("invalid width ratio " + ratio.to_string());
  const auto d = static_cast<std::size_t>(std::llround(ratio.value() * static_cast<double>(max_dim)));
  if (d == 0) throw std::invalid_argument("width " + ratio.to_string() + " of " + std::to_string(max_dim) + " is empty");
  return d;
}

void DenoiserConfig::validate() const {
  if (data_dim == 0) throw std::invalid_argument("data_dim must be positive");
  if (hidden_width == 0 || hidden_width % 8 != 0)
    throw std::invalid_argument("hidden_width must be a positive multiple of 8, got " + std::to_string(hidden_width));
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0)
    throw std::invalid_argument("time_embed_dim must be even and positive, got " + std::to_string(time_embed_dim));
  if (allowed_widths.empty()) throw std::invalid_argument("allowed_widths must not be empty");
  for (std::size_t i = 0; i < allowed_widths.size(); ++i) {
    WidthRatio::checked(allowed_widths[i].eighths);
    if (i > 0 && !(allowed_widths[i - 1] < allowed_widths[i]))
      throw std::invalid_argument("allowed_widths must be strictly increasing");
  }
  if (allowed_widths.back() != WidthRatio::full()) throw std::invalid_argument("allowed_widths must include 8/8");
}

bool DenoiserConfig::allows(WidthRatio w) const {
  return std::binary_search(allowed_widths.begin(), allowed_widths.end(), w);
}

void DenoiserConfig::require_allowed(WidthRatio w) const {
  if (!allows(w)) throw std::invalid_argument("width " + w.to_string() + " is not in the allowed set");
}

std::vector<std::string> SupernetParams::array_names() const {
  std::vector<std::string> names = {"input.weight", "input.bias"};
  for (std::size_t l = 0; l < config.depth; ++l) {
    const std::string i = std::to_string(l);
    names.insert(names.end(), {"hidden." + i + ".weight", "hidden." + i + ".bias", "time." + i + ".weight",
                               "time." + i + ".bias"});
  }
  names.insert(names.end(), {"output.weight", "output.bias"});
  return names;
}

std::vector<Shape> layer_shapes(const DenoiserConfig& config, std::size_t hidden) {
  const std::size_t h = hidden, d = config.data_dim, e = config.time_embed_dim;
  std::vector<Shape> shapes = {{h, d}, {h}};
  for (std::size_t l = 0; l < config.depth; ++l) shapes.insert(shapes.end(), {{h, h}, {h}, {h, e}, {h}});
  shapes.insert(shapes.end(), {{d, h}, {d}});
  return shapes;
}

std::vector<Shape> SupernetParams::expected_shapes() const { return layer_shapes(config, config.hidden_width); }

void SupernetParams::validate() const {
  config.validate();
  const auto shapes = expected_shapes();
  if (tensors.size() != shapes.size())
    throw std::invalid_argument("supernet has " + std::to_string(tensors.size()) + " arrays, expected " +
                                std::to_string(shapes.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i)
    if (tensors[i].shape() != shapes[i])
      throw ShapeError("supernet array " + std::to_string(i) + " has shape " + shape_to_string(tensors[i].shape()) +
                       ", expected " + shape_to_string(shapes[i]));
}

SupernetParams SupernetParams::initialize(const DenoiserConfig& config, std::uint64_t seed) {
  config.validate();
  SupernetParams net{config, {}};
  std::mt19937_64 rng(seed);
  const auto shapes = net.expected_shapes();
  // Weight/bias pairs share the weight's fan-in, as in common framework defaults.
  for (std::size_t i = 0; i < shapes.size(); i += 2) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(shapes[i][1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t j = i; j < i + 2; ++j) {
      Tensor t(shapes[j]);
      for (double& v : t.data()) v = dist(rng);
      net.tensors.push_back(std::move(t));
    }
  }
  return net;
}

std::size_t param_count(const DenoiserConfig& config, WidthRatio width) {
  config.require_allowed(width);
  const std::size_t h = config.hidden_at(width), d = config.data_dim, e = config.time_embed_dim;
  return (h * d + h) + config.depth * (h * h + h + h * e + h) + (d * h + d);
}

Tensor time_embedding(int t, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) throw std::invalid_argument("time embedding dim must be even, got " + std::to_string(dim));
  if (t < 1) throw std::invalid_argument("time embedding needs t >= 1");
  const std::size_t half = dim / 2;
  Tensor out({1, dim});
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    out[i] = std::sin(t * freq);
    out[half + i] = std::cos(t * freq);
  }
  return out;
}

Tensor slimmable_affine_forward(const Tensor& w, const Tensor& b, WidthRatio in_ratio, WidthRatio out_ratio,
                                const Tensor& x) {
  if (w.rank() != 2 || b.rank() != 1 || b.size() != w.rows())
    throw ShapeError("slimmable_affine_forward: weight " + shape_to_string(w.shape()) + " and bias " +
                     shape_to_string(b.shape()) + " disagree");
  const std::size_t in = sliced_dim(in_ratio, w.cols());
  const std::size_t out = sliced_dim(out_ratio, w.rows());
  if (x.cols() != in)
    throw ShapeError("slimmable_affine_forward: input has " + std::to_string(x.cols()) + " features, slice expects " +
                     std::to_string(in));
  Tensor y({x.rows(), out});
  kernels::affine(x.ptr(), x.rows(), in, x.cols(), w.ptr(), w.cols(), out, b.ptr(), y.ptr(), out);
  return y;
}

namespace {

// Shared body of the sliced and the compact forward; `max_hidden` is the row
// stride of the hidden-facing weight arrays.
Tensor forward_impl(const std::vector<Tensor>& p, std::size_t data_dim, std::size_t max_hidden, std::size_t depth,
                    std::size_t embed_dim, std::size_t hidden, const Tensor& x_t, int t) {
  if (x_t.rank() != 2 || x_t.cols() != data_dim)
    throw ShapeError("denoiser input must be n x " + std::to_string(data_dim) + ", got " + shape_to_string(x_t.shape()));
  const std::size_t n = x_t.rows();
  const Tensor temb = time_embedding(t, embed_dim);

  Tensor h({n, hidden});
  kernels::affine(x_t.ptr(), n, data_dim, data_dim, p[0].ptr(), data_dim, hidden, p[1].ptr(), h.ptr(), hidden);

  Tensor inject({1, hidden});
  Tensor pre({n, hidden});
  Tensor act({n, hidden});
  for (std::size_t l = 0; l < depth; ++l) {
    const Tensor& w_hidden = p[SupernetParams::hidden_weight(l)];
    const Tensor& b_hidden = p[SupernetParams::hidden_bias(l)];
    const Tensor& w_time = p[SupernetParams::time_weight(l)];
    const Tensor& b_time = p[SupernetParams::time_bias(l)];
    kernels::affine(temb.ptr(), 1, embed_dim, embed_dim, w_time.ptr(), embed_dim, hidden, b_time.ptr(), inject.ptr(),
                    hidden);
    kernels::affine(h.ptr(), n, hidden, hidden, w_hidden.ptr(), max_hidden, hidden, b_hidden.ptr(), pre.ptr(), hidden);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < hidden; ++c) pre[r * hidden + c] += inject[c];
    kernels::silu(pre.ptr(), act.ptr(), pre.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += act[i];
  }

  const std::size_t out_w = 2 + 4 * depth;
  Tensor eps({n, data_dim});
  kernels::affine(h.ptr(), n, hidden, hidden, p[out_w].ptr(), max_hidden, data_dim, p[out_w + 1].ptr(), eps.ptr(),
                  data_dim);
  return eps;
}

}  // namespace

Tensor denoiser_forward(const SupernetParams& net, WidthRatio width, const Tensor& x_t, int t) {
  net.config.require_allowed(width);
  const auto& c = net.config;
  return forward_impl(net.tensors, c.data_dim, c.hidden_width, c.depth, c.time_embed_dim, c.hidden_at(width), x_t, t);
}

DenseNetwork extract_subnetwork(const SupernetParams& net, WidthRatio width) {
  net.config.require_allowed(width);
  const auto& c = net.config;
  const std::size_t h = c.hidden_at(width);
  DenseNetwork out{c.data_dim, h, c.depth, c.time_embed_dim, {}};
  const auto shapes = layer_shapes(c, h);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Tensor& src = net.tensors[i];
    const Shape& shape = shapes[i];
    Tensor dst(shape);
    const std::size_t rows = shape.size() == 2 ? shape[0] : 1;
    const std::size_t cols = shape.back();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t col = 0; col < cols; ++col) dst[r * cols + col] = src[r * src.cols() + col];
    out.tensors.push_back(std::move(dst));
  }
  return out;
}

Tensor dense_forward(const DenseNetwork& net, const Tensor& x_t, int t) {
  return forward_impl(net.tensors, net.data_dim, net.hidden_width, net.depth, net.time_embed_dim, net.hidden_width,
                      x_t, t);
}

Var denoiser_graph(Graph& g, std::span<const Var> params, const DenoiserConfig& config, WidthRatio width,
                   const Tensor& x_t, const std::vector<int>& t) {
  config.require_allowed(width);
  if (params.size() != SupernetParams::array_count(config.depth))
    throw std::invalid_argument("denoiser_graph: wrong parameter count");
  if (x_t.rank() != 2 || x_t.cols() != config.data_dim || t.size() != x_t.rows())
    throw ShapeError("denoiser_graph: input " + shape_to_string(x_t.shape()) + " with " + std::to_string(t.size()) +
                     " timesteps");
  const std::size_t n = x_t.rows(), d = config.data_dim, e = config.time_embed_dim;
  const std::size_t h = config.hidden_at(width);

  Tensor temb({n, e});
  for (std::size_t r = 0; r < n; ++r) {
    const Tensor row = time_embedding(t[r], e);
    std::copy(row.data().begin(), row.data().end(), temb.data().begin() + r * e);
  }
  Var x = g.constant(x_t);
  Var emb = g.constant(std::move(temb));

  Var hid = add_bias(matmul_bt(x, slice_leading(params[0], h, d)), slice_leading(params[1], 1, h));
  for (std::size_t l = 0; l < config.depth; ++l) {
    Var inject = add_bias(matmul_bt(emb, slice_leading(params[SupernetParams::time_weight(l)], h, e)),
                          slice_leading(params[SupernetParams::time_bias(l)], 1, h));
    Var pre = add_bias(matmul_bt(hid, slice_leading(params[SupernetParams::hidden_weight(l)], h, h)),
                       slice_leading(params[SupernetParams::hidden_bias(l)], 1, h));
    hid = add(hid, silu(add(pre, inject)));
  }
  const std::size_t out_w = 2 + 4 * config.depth;
  return add_bias(matmul_bt(hid, slice_leading(params[out_w], d, h)), slice_leading(params[out_w + 1], 1, d));
}

}  // namespace stepwidth
