// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode autodiff over Tensor. Forward ops evaluate eagerly
// and record onto the tape. gradient() runs a plain (non-recording) reverse
// pass; gradient_as_graph() runs the same reverse pass but emits the adjoint
// computation as new graph nodes, so a scalar built from the result can be
// differentiated again. That second-order path is what the gradient-matching
// loss needs.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gmas/tensor.hpp"

namespace gmas {

enum class Op : std::uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatmul,
  kAffine,
  kTanh,
  kSum,
  kMean,
  kAbs,
  kSquare,
  kL2Norm,
  kLinfNorm,
  kMaxWithScalar,
  kExp,
  kDot,
  kConcat,
  kScale,
  kBroadcast,
  kSlice,
  kTranspose,
  kOpCount,  // sentinel
};

const char* op_name(Op op);

class Graph {
 public:
  Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Differentiation roots (parameters or inputs).
  Tensor leaf(const Tensor& value);
  // Recorded but never differentiated.
  Tensor constant(const Tensor& value);
  Tensor constant(double v);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  // a [m,k] times b [k] -> [m], or b [k,n] -> [m,n]
  Tensor matmul(const Tensor& a, const Tensor& b);
  // w x + b with w [m,k], x [k] or [k,n], bias [m] broadcast over columns
  Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b);
  Tensor tanh(const Tensor& a);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor abs(const Tensor& a);
  Tensor square(const Tensor& a);
  Tensor l2norm(const Tensor& a);
  Tensor linf_norm(const Tensor& a);
  Tensor max_with_scalar(const Tensor& a, double c);
  Tensor exp(const Tensor& a);
  Tensor dot(const Tensor& a, const Tensor& b);
  // rank 1: concatenation; rank 2: stack rows (column counts must match)
  Tensor concat(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  // scalar -> filled tensor of the given shape
  Tensor broadcast(const Tensor& s, const std::vector<int>& shape);
  // rank 1: elements [off, off+len); rank 2: rows [off, off+len)
  Tensor slice(const Tensor& a, int off, int len);
  Tensor transpose(const Tensor& a);

  // Reverse-mode gradients of a scalar output w.r.t. each tensor in wrt.
  // Unreachable entries come back as zero tensors of matching shape.
  std::vector<Tensor> gradient(const Tensor& output, std::span<const Tensor> wrt);
  Tensor gradient(const Tensor& output, const Tensor& wrt);

  // Same reverse pass, but the adjoint arithmetic is emitted as live graph
  // nodes; the returned tensor can participate in further ops and be
  // differentiated again. Throws if the path crosses an op with no
  // registered second-order adjoint.
  Tensor gradient_as_graph(const Tensor& output, const Tensor& wrt);

  // Row i is the gradient of output[i] w.r.t. wrt (one reverse pass per row).
  Tensor jacobian(const Tensor& output, const Tensor& wrt);

  std::size_t size() const { return nodes_.size(); }
  // Nodes emitted by gradient_as_graph since construction/reset. The
  // baseline training path asserts this stays at zero.
  std::size_t recorded_nodes() const { return recorded_nodes_; }
  std::uint32_t id() const { return id_; }

  void reset();

 private:
  struct Node {
    Op op = Op::kConst;
    std::array<int, 3> in{-1, -1, -1};
    double imm = 0.0;  // scale factor / max threshold
    int off = 0;       // slice offset
    std::vector<int> shape;
    std::vector<double> value;
  };

  int push(Node n);
  Tensor wrap(int id) const;
  int import(const Tensor& t, bool as_leaf = false);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  Tensor binary_elementwise(Op op, const Tensor& a, const Tensor& b);
  Tensor unary_elementwise(Op op, const Tensor& a);

  // reachability from the marked set, ascending over node ids
  std::vector<char> depends_on(std::span<const int> roots, int upto) const;
  void vjp_plain(int id, std::vector<std::vector<double>>& adj, const std::vector<char>& needs) const;
  int vjp_record(int id, int slot, int adj_id);
  std::vector<double>& adj_buffer(std::vector<std::vector<double>>& adj, int id) const;

  std::vector<Node> nodes_;
  std::size_t recorded_nodes_ = 0;
  bool recording_backward_ = false;
  std::uint32_t id_ = 0;
};

}  // namespace gmas
