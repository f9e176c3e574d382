// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stepwidth/kernels.hpp"

namespace {

using namespace stepwidth;

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

template <bool Parallel>
void BM_Affine(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t width = 64;
  const auto x = random_vector(rows * width, 1), w = random_vector(width * width, 2), b = random_vector(width, 3);
  std::vector<double> y(rows * width);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::affine(x.data(), rows, width, width, w.data(), width, width, b.data(), y.data(), width);
    else
      kernels::serial::affine(x.data(), rows, width, width, w.data(), width, width, b.data(), y.data(), width);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(rows * width * width));
}

template <bool Parallel>
void BM_MatmulAt(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 64, n = 64;
  const auto a = random_vector(k * m, 4), b = random_vector(k * n, 5);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::matmul_at(a.data(), b.data(), c.data(), k, m, n);
    else
      kernels::serial::matmul_at(a.data(), b.data(), c.data(), k, m, n);
    benchmark::DoNotOptimize(c.data());
  }
}

template <bool Parallel>
void BM_RbfPairSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vector(n * 2, 6), y = random_vector(n * 2, 7);
  for (auto _ : state) {
    double s = Parallel ? kernels::rbf_pair_sum(x.data(), n, y.data(), n, 2, 0.5)
                        : kernels::serial::rbf_pair_sum(x.data(), n, y.data(), n, 2, 0.5);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}

BENCHMARK(BM_Affine<false>)->Arg(128)->Arg(2048);
BENCHMARK(BM_Affine<true>)->Arg(128)->Arg(2048);
BENCHMARK(BM_MatmulAt<false>)->Arg(128)->Arg(2048);
BENCHMARK(BM_MatmulAt<true>)->Arg(128)->Arg(2048);
BENCHMARK(BM_RbfPairSum<false>)->Arg(512)->Arg(2048);
BENCHMARK(BM_RbfPairSum<true>)->Arg(512)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
