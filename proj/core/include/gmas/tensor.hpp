// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major f64 tensor (rank 0, 1 or 2) plus the raw kernels shared by
// the graph engine and the plain value-evaluation paths.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gmas {

struct Tensor {
  std::vector<int> shape;   // empty = scalar; product(shape) == data.size()
  std::vector<double> data;
  int node = -1;            // handle into the graph that produced it, -1 for plain values
  std::uint32_t graph_id = 0;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor scalar(double v);
  static Tensor vec(std::vector<double> v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);

  int rank() const { return static_cast<int>(shape.size()); }
  std::int64_t numel() const;
  bool is_scalar() const { return numel() == 1; }
  double item() const;

  int rows() const { return rank() >= 1 ? shape[0] : 1; }
  int cols() const { return rank() == 2 ? shape[1] : 1; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }
};

std::string shape_str(const std::vector<int>& shape);
bool same_shape(const Tensor& a, const Tensor& b);
bool all_finite(std::span<const double> v);

#if defined(_MSC_VER)
#define GMAS_RESTRICT __restrict
#else
#define GMAS_RESTRICT __restrict__
#endif

namespace kern {

// All kernels accumulate into the destination; callers zero it first.
// Destinations must not alias the operands.

// c[m,n] += a[m,k] @ b[k,n]
void matmul(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int k, int n);
// c[m,k] += a[m,n] @ b[k,n]^T
void matmul_a_bt(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int n, int k);
// c[k,n] += a[m,k]^T @ b[m,n]
void matmul_at_b(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int k, int n);
// y[m] += a[m,k] @ x[k]
void matvec(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT x, double* GMAS_RESTRICT y, int m, int k);
// y[k] += a[m,k]^T @ x[m]
void matvec_t(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT x, double* GMAS_RESTRICT y, int m, int k);
// c[m,k] += u[m] outer v[k]
void outer(const double* GMAS_RESTRICT u, const double* GMAS_RESTRICT v, double* GMAS_RESTRICT c, int m, int k);

void tanh_inplace(double* x, std::int64_t n);

}  // namespace kern

}  // namespace gmas
