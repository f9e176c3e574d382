// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "stepwidth/autodiff.hpp"

using namespace stepwidth;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = normal(rng);
  return t;
}

// Contracts a tensor-valued expression with fixed weights so it yields a scalar.
Var contract(Graph& g, Var v, const Tensor& weights) { return sum(mul(v, g.constant(weights))); }

}  // namespace

TEST_CASE("forward values on hand examples") {
  const Expression prod = [](Graph&, const VarMap& in) { return matmul(in.at("a"), in.at("b")); };
  CHECK(evaluate(prod, {{"a", Tensor({1, 1}, {2.0})}, {"b", Tensor({1, 1}, {3.0})}}) == Tensor({1, 1}, {6.0}));
  CHECK(evaluate(prod, {{"a", Tensor::matrix({{1, 2}, {3, 4}})}, {"b", Tensor::matrix({{1}, {1}})}}) ==
        Tensor::matrix({{3}, {7}}));

  const Tensor x = Tensor::matrix({{1.5, -2}, {0.25, 8}});
  const Expression plus_zero = [](Graph&, const VarMap& in) { return add(in.at("x"), in.at("z")); };
  CHECK(evaluate(plus_zero, {{"x", x}, {"z", Tensor({2, 2}, 0.0)}}) == x);
}

TEST_CASE("shape mismatch names the operation and both shapes") {
  const Expression bad = [](Graph&, const VarMap& in) { return matmul(in.at("a"), in.at("b")); };
  try {
    evaluate(bad, {{"a", Tensor({2, 3})}, {"b", Tensor({2, 3})}});
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  const Expression bad_add = [](Graph&, const VarMap& in) { return add(in.at("a"), in.at("b")); };
  CHECK_THROWS_AS(evaluate(bad_add, {{"a", Tensor({2, 3})}, {"b", Tensor({3, 2})}}), ShapeError);
}

TEST_CASE("polynomial and constant gradients") {
  const Expression square = [](Graph&, const VarMap& in) { return sum(mul(in.at("p"), in.at("p"))); };
  CHECK(gradient(square, {{"p", Tensor::scalar(3.0)}}, {"p"}).at("p").item() == 6.0);

  const Expression free_of_p = [](Graph&, const VarMap& in) { return sum(in.at("q")); };
  const auto g = gradient(free_of_p, {{"p", Tensor::vector({1, 2})}, {"q", Tensor::vector({3, 4})}}, {"p", "q"});
  CHECK(g.at("p") == Tensor({2}, 0.0));
  CHECK(g.at("q") == Tensor({2}, 1.0));
}

TEST_CASE("non-scalar loss is rejected") {
  const Expression vec = [](Graph&, const VarMap& in) { return silu(in.at("p")); };
  CHECK_THROWS_AS(gradient(vec, {{"p", Tensor::vector({1, 2})}}, {"p"}), ShapeError);
}

TEST_CASE("squared residual of a 2x2 linear map matches central differences") {
  const Expression loss = [](Graph&, const VarMap& in) {
    Var r = sub(in.at("eps"), matmul(in.at("W"), in.at("x")));
    return sum(mul(r, r));
  };
  const NamedTensors inputs{{"W", Tensor::matrix({{0.3, -1.2}, {0.7, 0.4}})},
                            {"x", Tensor::matrix({{0.5}, {-1.5}})},
                            {"eps", Tensor::matrix({{0.2}, {1.1}})}};
  CHECK(finite_difference_check(loss, inputs, {"W"}, 1e-5) <= 1e-6);
}

TEST_CASE("finite differences are exact for linear losses and need a positive step") {
  const Expression linear = [](Graph& g, const VarMap& in) {
    return sum(mul(in.at("p"), g.constant(Tensor::vector({2, -3, 0.5}))));
  };
  const NamedTensors inputs{{"p", Tensor::vector({1, 2, 3})}};
  CHECK(finite_difference_check(linear, inputs, {"p"}, 1e-3) <= 1e-9);
  CHECK_THROWS_AS(finite_difference_check(linear, inputs, {"p"}, 0.0), std::invalid_argument);
}

TEST_CASE("every primitive matches central differences on random tensors") {
  using Build = std::function<Var(Graph&, const VarMap&)>;
  struct Case {
    std::string name;
    Build build;
    std::function<NamedTensors(std::mt19937_64&)> inputs;
  };
  auto pair = [](Shape a, Shape b) {
    return [a, b](std::mt19937_64& rng) { return NamedTensors{{"a", random_tensor(a, rng)}, {"b", random_tensor(b, rng)}}; };
  };
  const std::vector<Case> cases{
      {"matmul", [](Graph&, const VarMap& in) { return matmul(in.at("a"), in.at("b")); }, pair({3, 4}, {4, 2})},
      {"matmul_bt", [](Graph&, const VarMap& in) { return matmul_bt(in.at("a"), in.at("b")); }, pair({3, 4}, {2, 4})},
      {"add", [](Graph&, const VarMap& in) { return add(in.at("a"), in.at("b")); }, pair({3, 2}, {3, 2})},
      {"sub", [](Graph&, const VarMap& in) { return sub(in.at("a"), in.at("b")); }, pair({3, 2}, {3, 2})},
      {"mul", [](Graph&, const VarMap& in) { return mul(in.at("a"), in.at("b")); }, pair({3, 2}, {3, 2})},
      {"add_bias", [](Graph&, const VarMap& in) { return add_bias(in.at("a"), in.at("b")); }, pair({4, 3}, {3})},
      {"scale", [](Graph&, const VarMap& in) { return scale(mul(in.at("a"), in.at("b")), -1.7); }, pair({2, 2}, {2, 2})},
      {"add_scalar", [](Graph&, const VarMap& in) { return mul(add_scalar(in.at("a"), 0.3), in.at("b")); },
       pair({2, 3}, {2, 3})},
      {"silu", [](Graph&, const VarMap& in) { return silu(mul(in.at("a"), in.at("b"))); }, pair({3, 3}, {3, 3})},
      {"mean", [](Graph&, const VarMap& in) { return mean(mul(in.at("a"), in.at("b"))); }, pair({3, 3}, {3, 3})},
      {"concat_cols", [](Graph&, const VarMap& in) { return concat_cols(in.at("a"), in.at("b")); }, pair({2, 3}, {2, 1})},
      {"slice_cols", [](Graph&, const VarMap& in) { return mul(slice_cols(in.at("a"), 1, 2), in.at("b")); },
       pair({3, 4}, {3, 2})},
      {"slice_leading", [](Graph&, const VarMap& in) { return mul(slice_leading(in.at("a"), 2, 2), in.at("b")); },
       pair({3, 4}, {2, 2})},
  };

  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int round = 0; round < 8; ++round) {
    for (const Case& c : cases) {
      NamedTensors inputs = c.inputs(rng);
      const Tensor probe = evaluate(c.build, inputs);
      inputs["w"] = random_tensor(probe.shape(), rng);
      const Expression loss = [&](Graph& g, const VarMap& in) {
        const Var out = c.build(g, in);
        return contract(g, out, g.value(in.at("w")));
      };
      const double err = finite_difference_check(loss, inputs, {"a", "b"}, 1e-5);
      INFO(c.name << " round " << round);
      CHECK(err <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("evaluation is pure and gradients are linear") {
  std::mt19937_64 rng(5);
  const NamedTensors inputs{{"a", random_tensor({3, 3}, rng)}, {"b", random_tensor({3, 3}, rng)}};
  const Expression f = [](Graph&, const VarMap& in) { return sum(silu(matmul(in.at("a"), in.at("b")))); };
  const Expression h = [](Graph&, const VarMap& in) { return mean(mul(in.at("a"), in.at("a"))); };
  CHECK(evaluate(f, inputs) == evaluate(f, inputs));

  const double alpha = 0.75, beta = -2.5;
  const Expression combo = [&](Graph& g, const VarMap& in) { return add(scale(f(g, in), alpha), scale(h(g, in), beta)); };
  const Tensor gf = gradient(f, inputs, {"a"}).at("a"), gh = gradient(h, inputs, {"a"}).at("a");
  const Tensor gc = gradient(combo, inputs, {"a"}).at("a");
  for (std::size_t i = 0; i < gc.size(); ++i) CHECK(gc[i] == doctest::Approx(alpha * gf[i] + beta * gh[i]).epsilon(1e-12));
}

TEST_CASE("backward visits each recorded node once") {
  Graph g;
  Var p = g.parameter(Tensor::scalar(2.0));
  int visits = 0;
  Var q = g.record(Tensor::scalar(4.0), {p}, [&](Graph& graph, const Tensor& up) {
    ++visits;
    graph.grad_buffer(p)[0] += up[0] * 2.0 * 2.0;
  });
  Var loss = add(q, q);
  const auto before = Graph::backward_calls();
  g.backward(loss);
  CHECK(visits == 1);
  CHECK(g.grad(p).item() == 8.0);
  CHECK(Graph::backward_calls() == before + 1);
}
