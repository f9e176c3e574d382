// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/autodiff.hpp"

#include <cmath>
#include <string_view>

#include "stepwidth/kernels.hpp"

namespace stepwidth {

namespace {

thread_local std::uint64_t g_backward_calls = 0;

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a) + " and " + shape_to_string(b));
}

void same_graph(std::string_view op, Var a, Var b) {
  if (&a.graph() != &b.graph()) throw std::invalid_argument(std::string(op) + ": operands belong to different graphs");
}

void require_matrix(std::string_view op, const Tensor& t) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
}

void accumulate(Tensor& dst, const Tensor& src) {
  double* d = dst.ptr();
  const double* s = src.ptr();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_[p.index()].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(fn) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_buffer(Var v) {
  Node& node = nodes_[v.index()];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_[v.index()];
  return node.has_grad ? node.grad : Tensor(node.value.shape(), 0.0);
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw std::invalid_argument("backward: loss belongs to a different graph");
  if (value(loss).size() != 1)
    throw ShapeError("backward: loss must be scalar, got shape " + shape_to_string(value(loss).shape()));
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  ++g_backward_calls;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

std::uint64_t Graph::backward_calls() { return g_backward_calls; }

Var matmul(Var a, Var b) {
  same_graph("matmul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("matmul", av);
  require_matrix("matmul", bv);
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av.shape(), bv.shape());
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  kernels::matmul(av.ptr(), bv.ptr(), out.ptr(), m, k, n);
  return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, const Tensor& up) {
    if (g.requires_grad(a)) {
      Tensor ga({m, k});
      kernels::affine(up.ptr(), m, n, n, g.value(b).ptr(), n, k, nullptr, ga.ptr(), k);
      accumulate(g.grad_buffer(a), ga);
    }
    if (g.requires_grad(b)) {
      Tensor gb({k, n});
      kernels::matmul_at(g.value(a).ptr(), up.ptr(), gb.ptr(), m, k, n);
      accumulate(g.grad_buffer(b), gb);
    }
  });
}

Var matmul_bt(Var a, Var b) {
  same_graph("matmul_bt", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("matmul_bt", av);
  require_matrix("matmul_bt", bv);
  if (av.cols() != bv.cols()) shape_mismatch("matmul_bt", av.shape(), bv.shape());
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out({m, n});
  kernels::affine(av.ptr(), m, k, k, bv.ptr(), k, n, nullptr, out.ptr(), n);
  return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, const Tensor& up) {
    if (g.requires_grad(a)) {
      Tensor ga({m, k});
      kernels::matmul(up.ptr(), g.value(b).ptr(), ga.ptr(), m, n, k);
      accumulate(g.grad_buffer(a), ga);
    }
    if (g.requires_grad(b)) {
      Tensor gb({n, k});
      kernels::matmul_at(up.ptr(), g.value(a).ptr(), gb.ptr(), m, n, k);
      accumulate(g.grad_buffer(b), gb);
    }
  });
}

namespace {

template <class Fwd, class Bwd>
Var elementwise_binary(std::string_view op, Var a, Var b, Fwd fwd, Bwd bwd) {
  same_graph(op, a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch(op, av.shape(), bv.shape());
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return a.graph().record(std::move(out), {a, b}, [a, b, bwd](Graph& g, const Tensor& up) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buffer(a);
      for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * bwd(av[i], bv[i], true);
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      for (std::size_t i = 0; i < up.size(); ++i) gb[i] += up[i] * bwd(av[i], bv[i], false);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, bool) { return 1.0; });
}

Var sub(Var a, Var b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, bool wrt_a) { return wrt_a ? 1.0 : -1.0; });
}

Var mul(Var a, Var b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, bool wrt_a) { return wrt_a ? y : x; });
}

Var add_bias(Var x, Var bias) {
  same_graph("add_bias", x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix("add_bias", xv);
  if (bv.rank() != 1 || bv.size() != xv.cols()) shape_mismatch("add_bias", xv.shape(), bv.shape());
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = xv[r * n + c] + bv[c];
  return x.graph().record(std::move(out), {x, bias}, [x, bias, m, n](Graph& g, const Tensor& up) {
    if (g.requires_grad(x)) accumulate(g.grad_buffer(x), up);
    if (g.requires_grad(bias)) {
      Tensor& gb = g.grad_buffer(bias);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += up[r * n + c];
    }
  });
}

Var scale(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return a.graph().record(std::move(out), {a}, [a, s](Graph& g, const Tensor& up) {
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * s;
  });
}

Var add_scalar(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) { accumulate(g.grad_buffer(a), up); });
}

Var silu(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  kernels::silu(av.ptr(), out.ptr(), av.size());
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    const Tensor& av = g.value(a);
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double s = sigmoid(av[i]);
      ga[i] += up[i] * s * (1.0 + av[i] * (1.0 - s));
    }
  });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double total = 0.0;
  for (double v : av.data()) total += v;
  return a.graph().record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& up) {
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += up[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var concat_cols(Var a, Var b) {
  same_graph("concat_cols", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("concat_cols", av);
  require_matrix("concat_cols", bv);
  if (av.rows() != bv.rows()) shape_mismatch("concat_cols", av.shape(), bv.shape());
  const std::size_t m = av.rows(), p = av.cols(), q = bv.cols();
  Tensor out({m, p + q});
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < p; ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < q; ++c) out(r, p + c) = bv(r, c);
  }
  return a.graph().record(std::move(out), {a, b}, [a, b, m, p, q](Graph& g, const Tensor& up) {
    if (g.requires_grad(a)) {
      Tensor& ga = g.grad_buffer(a);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < p; ++c) ga(r, c) += up(r, c);
    }
    if (g.requires_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < q; ++c) gb(r, c) += up(r, p + c);
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_matrix("slice_cols", av);
  if (count == 0 || begin + count > av.cols())
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for shape " + shape_to_string(av.shape()));
  const std::size_t m = av.rows();
  Tensor out({m, count});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
  return a.graph().record(std::move(out), {a}, [a, begin, count, m](Graph& g, const Tensor& up) {
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += up(r, c);
  });
}

Var slice_leading(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = a.value();
  if (av.rank() == 1) {
    if (rows != 1 || cols == 0 || cols > av.size())
      throw ShapeError("slice_leading: cannot take " + std::to_string(cols) + " entries of " +
                       shape_to_string(av.shape()));
    Tensor out({cols}, std::vector<double>(av.data().begin(), av.data().begin() + cols));
    return a.graph().record(std::move(out), {a}, [a, cols](Graph& g, const Tensor& up) {
      Tensor& ga = g.grad_buffer(a);
      for (std::size_t c = 0; c < cols; ++c) ga[c] += up[c];
    });
  }
  require_matrix("slice_leading", av);
  if (rows == 0 || cols == 0 || rows > av.rows() || cols > av.cols())
    throw ShapeError("slice_leading: block " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " exceeds shape " + shape_to_string(av.shape()));
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = av(r, c);
  return a.graph().record(std::move(out), {a}, [a, rows, cols](Graph& g, const Tensor& up) {
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga(r, c) += up(r, c);
  });
}

Tensor evaluate(const Expression& expr, const NamedTensors& inputs) {
  Graph g;
  VarMap vars;
  for (const auto& [name, t] : inputs) vars.emplace(name, g.constant(t));
  return g.value(expr(g, vars));
}

NamedTensors gradient(const Expression& expr, const NamedTensors& inputs, const std::set<std::string>& wrt) {
  for (const auto& name : wrt)
    if (!inputs.contains(name)) throw std::invalid_argument("gradient: unknown input '" + name + "'");
  Graph g;
  VarMap vars;
  for (const auto& [name, t] : inputs) vars.emplace(name, wrt.contains(name) ? g.parameter(t) : g.constant(t));
  Var loss = expr(g, vars);
  g.backward(loss);
  NamedTensors grads;
  for (const auto& name : wrt) grads.emplace(name, g.grad(vars.at(name)));
  return grads;
}

double finite_difference_check(const Expression& expr, const NamedTensors& inputs,
                               const std::set<std::string>& wrt, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_difference_check: step must be positive");
  const NamedTensors analytic = gradient(expr, inputs, wrt);
  NamedTensors probe = inputs;
  double worst = 0.0;
  for (const auto& name : wrt) {
    Tensor& p = probe.at(name);
    const Tensor& grad = analytic.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + step;
      const double up = evaluate(expr, probe).item();
      p[i] = orig - step;
      const double down = evaluate(expr, probe).item();
      p[i] = orig;
      const double central = (up - down) / (2.0 * step);
      const double err = std::abs(grad[i] - central) / (std::abs(grad[i]) + std::abs(central) + 1e-12);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace stepwidth
