// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/kernels.hpp"

#include <cmath>
#include <vector>

namespace stepwidth::kernels {

namespace {
// Minimum loop work before a region goes parallel.
constexpr std::size_t kParallelWork = 1 << 14;

inline double silu_scalar(double v) { return v / (1.0 + std::exp(-v)); }

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
  double d = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double diff = a[k] - b[k];
    d += diff * diff;
  }
  return d;
}
}  // namespace

void affine(const double* x, std::size_t rows, std::size_t in, std::size_t x_stride, const double* w,
            std::size_t w_stride, std::size_t out, const double* b, double* y, std::size_t y_stride) {
  const long long n_rows = static_cast<long long>(rows);
#pragma omp parallel for schedule(static) if (rows * in * out > kParallelWork)
  for (long long r = 0; r < n_rows; ++r) {
    const double* xr = x + r * x_stride;
    double* yr = y + r * y_stride;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * w_stride;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = b ? acc + b[o] : acc;
    }
  }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  const long long n_rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (long long i = 0; i < n_rows; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n) {
  const long long n_rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (long long i = 0; i < n_rows; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void silu(const double* x, double* out, std::size_t n) {
  const long long len = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (long long i = 0; i < len; ++i) out[i] = silu_scalar(x[i]);
}

double rbf_pair_sum(const double* x, std::size_t nx, const double* y, std::size_t ny, std::size_t dim,
                    double inv_two_h2) {
  std::vector<double> row_sums(nx, 0.0);
  const long long n_rows = static_cast<long long>(nx);
#pragma omp parallel for schedule(static) if (nx * ny > kParallelWork)
  for (long long i = 0; i < n_rows; ++i) {
    const double* xi = x + i * dim;
    double s = 0.0;
    for (std::size_t j = 0; j < ny; ++j) s += std::exp(-sq_dist(xi, y + j * dim, dim) * inv_two_h2);
    row_sums[i] = s;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total;
}

namespace serial {

void affine(const double* x, std::size_t rows, std::size_t in, std::size_t x_stride, const double* w,
            std::size_t w_stride, std::size_t out, const double* b, double* y, std::size_t y_stride) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += x[r * x_stride + i] * w[o * w_stride + i];
      y[r * y_stride + o] = b ? acc + b[o] : acc;
    }
  }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void silu(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = silu_scalar(x[i]);
}

double rbf_pair_sum(const double* x, std::size_t nx, const double* y, std::size_t ny, std::size_t dim,
                    double inv_two_h2) {
  double total = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < ny; ++j) s += std::exp(-sq_dist(x + i * dim, y + j * dim, dim) * inv_two_h2);
    total += s;
  }
  return total;
}

}  // namespace serial

}  // namespace stepwidth::kernels
