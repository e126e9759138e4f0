// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace gmas {

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  std::int64_t n = 1;
  for (int dim : shape) {
    if (dim <= 0) throw std::invalid_argument("gmas: tensor dimension must be positive, got shape " + shape_str(shape));
    n *= dim;
  }
  if (n != static_cast<std::int64_t>(data.size()))
    throw std::invalid_argument("gmas: shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(data.size()));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vec(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

Tensor Tensor::zeros(std::vector<int> shape) {
  std::int64_t n = 1;
  for (int dim : shape) n *= dim;
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  std::int64_t n = 1;
  for (int dim : shape) n *= dim;
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), v));
}

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (int dim : shape) n *= dim;
  return n;
}

double Tensor::item() const {
  if (!is_scalar()) throw std::invalid_argument("gmas: item() on non-scalar tensor of shape " + shape_str(shape));
  return data[0];
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace kern {

// The k dimension is blocked so the [block, n] panel of the right-hand
// operand stays cache-resident across output rows; without it the panel is
// re-streamed from memory once per row and the encoder matmuls become
// memory-bound.
namespace {
constexpr int kPanelBlock = 256;
}

void matmul(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int k, int n) {
  for (int p0 = 0; p0 < k; p0 += kPanelBlock) {
    const int p1 = std::min(p0 + kPanelBlock, k);
    for (int i = 0; i < m; ++i) {
      double* crow = c + static_cast<std::size_t>(i) * n;
      const double* arow = a + static_cast<std::size_t>(i) * k;
      for (int p = p0; p < p1; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = b + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void matmul_a_bt(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int n, int k) {
  for (int p0 = 0; p0 < k; p0 += kPanelBlock) {
    const int p1 = std::min(p0 + kPanelBlock, k);
    for (int i = 0; i < m; ++i) {
      const double* arow = a + static_cast<std::size_t>(i) * n;
      double* crow = c + static_cast<std::size_t>(i) * k;
      for (int p = p0; p < p1; ++p) {
        const double* GMAS_RESTRICT brow = b + static_cast<std::size_t>(p) * n;
        // explicit simd reduction: the reassociation pattern is fixed at
        // compile time, so results stay bit-identical run to run
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (int j = 0; j < n; ++j) s += arow[j] * brow[j];
        crow[p] += s;
      }
    }
  }
}

void matmul_at_b(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT b, double* GMAS_RESTRICT c, int m, int k, int n) {
  for (int p0 = 0; p0 < k; p0 += kPanelBlock) {
    const int p1 = std::min(p0 + kPanelBlock, k);
    for (int i = 0; i < m; ++i) {
      const double* arow = a + static_cast<std::size_t>(i) * k;
      const double* brow = b + static_cast<std::size_t>(i) * n;
      for (int p = p0; p < p1; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        double* crow = c + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void matvec(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT x, double* GMAS_RESTRICT y, int m, int k) {
  for (int i = 0; i < m; ++i) {
    const double* GMAS_RESTRICT arow = a + static_cast<std::size_t>(i) * k;
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (int p = 0; p < k; ++p) s += arow[p] * x[p];
    y[i] += s;
  }
}

void matvec_t(const double* GMAS_RESTRICT a, const double* GMAS_RESTRICT x, double* GMAS_RESTRICT y, int m, int k) {
  for (int i = 0; i < m; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) y[p] += xi * arow[p];
  }
}

void outer(const double* GMAS_RESTRICT u, const double* GMAS_RESTRICT v, double* GMAS_RESTRICT c, int m, int k) {
  for (int i = 0; i < m; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    double* crow = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) crow[p] += ui * v[p];
  }
}

void tanh_inplace(double* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

}  // namespace kern

}  // namespace gmas
