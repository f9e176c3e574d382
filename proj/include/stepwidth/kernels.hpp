// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

// Dense inner loops. The top-level namespace holds the OpenMP versions; the
// `serial` namespace keeps straightforward single-threaded references that
// perform the same per-element operation sequence, so both produce
// bit-identical results (tests assert this) and the benchmark compares them.
namespace stepwidth::kernels {

/// y[r, o] = sum_i x[r, i] * w[o, i] (+ b[o]) for r < rows, o < out, i < in.
/// Strides let `w` be the leading block of a larger row-major matrix.
/// Per element: `in` multiplies, `in` adds from zero, one bias add.
void affine(const double* x, std::size_t rows, std::size_t in, std::size_t x_stride, const double* w,
            std::size_t w_stride, std::size_t out, const double* b, double* y, std::size_t y_stride);

/// c (m x n) = a (m x k) * b (k x n), all contiguous.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

/// c (m x n) = a^T * b with a (k x m), b (k x n).
void matmul_at(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n);

/// out[i] = x[i] / (1 + exp(-x[i])).
void silu(const double* x, double* out, std::size_t n);

/// sum_{i,j} exp(-|x_i - y_j|^2 * inv_two_h2), row sums folded in index order.
double rbf_pair_sum(const double* x, std::size_t nx, const double* y, std::size_t ny, std::size_t dim,
                    double inv_two_h2);

namespace serial {

void affine(const double* x, std::size_t rows, std::size_t in, std::size_t x_stride, const double* w,
            std::size_t w_stride, std::size_t out, const double* b, double* y, std::size_t y_stride);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void matmul_at(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n);
void silu(const double* x, double* out, std::size_t n);
double rbf_pair_sum(const double* x, std::size_t nx, const double* y, std::size_t ny, std::size_t dim,
                    double inv_two_h2);

}  // namespace serial

}  // namespace stepwidth::kernels
