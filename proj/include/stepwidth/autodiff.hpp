// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stepwidth/tensor.hpp"

namespace stepwidth {

class Graph;

/// Handle to a node recorded on a Graph.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t index() const { return index_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t index) : graph_(graph), index_(index) {}

  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// vector is already a topological order; backward() walks it in reverse.
/// A Graph is confined to one thread.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& upstream)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.index()].value; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }

  /// Gradient from the last backward(); zeros when `v` did not reach the loss.
  Tensor grad(Var v) const;

  /// Accumulates d(loss)/d(node) for every node; loss must hold one element.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  /// Number of backward() calls made on this thread.
  static std::uint64_t backward_calls();

  // Op-author interface.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Tensor& grad_buffer(Var v);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

// Primitives. Shapes must match exactly except add_bias, which broadcasts a
// length-n vector over the rows of an m x n matrix.
Var matmul(Var a, Var b);     // (m x k)(k x n)
Var matmul_bt(Var a, Var b);  // (m x k)(n x k)^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_bias(Var x, Var bias);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var silu(Var a);
Var sum(Var a);
Var mean(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// Leading rows x cols block of a matrix (or leading `cols` of a vector).
Var slice_leading(Var a, std::size_t rows, std::size_t cols);

using NamedTensors = std::map<std::string, Tensor>;
using VarMap = std::map<std::string, Var>;
using Expression = std::function<Var(Graph&, const VarMap&)>;

/// Forward value of `expr` with every input bound as a constant.
Tensor evaluate(const Expression& expr, const NamedTensors& inputs);

/// d(expr)/d(input) for each name in `wrt`; expr must produce a scalar.
NamedTensors gradient(const Expression& expr, const NamedTensors& inputs, const std::set<std::string>& wrt);

/// Max over the `wrt` entries of |analytic - central| / (|analytic| + |central| + 1e-12).
double finite_difference_check(const Expression& expr, const NamedTensors& inputs,
                               const std::set<std::string>& wrt, double step);

}  // namespace stepwidth
