// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/graph.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gmas {

namespace {

std::atomic<std::uint32_t> g_graph_counter{1};

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string("gmas: ") + op + ": shape mismatch " + shape_str(a.shape) + " vs " +
                              shape_str(b.shape));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const char* why) {
  throw std::invalid_argument(std::string("gmas: ") + op + ": " + why + ", got " + shape_str(a.shape));
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kMatmul: return "matmul";
    case Op::kAffine: return "affine";
    case Op::kTanh: return "tanh";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kAbs: return "abs";
    case Op::kSquare: return "square";
    case Op::kL2Norm: return "l2norm";
    case Op::kLinfNorm: return "linf_norm";
    case Op::kMaxWithScalar: return "max_with_scalar";
    case Op::kExp: return "exp";
    case Op::kDot: return "dot";
    case Op::kConcat: return "concat";
    case Op::kScale: return "scale";
    case Op::kBroadcast: return "broadcast";
    case Op::kSlice: return "slice";
    case Op::kTranspose: return "transpose";
    case Op::kOpCount: break;
  }
  return "?";
}

Graph::Graph() : id_(g_graph_counter.fetch_add(1)) {}

void Graph::reset() {
  nodes_.clear();
  recorded_nodes_ = 0;
  id_ = g_graph_counter.fetch_add(1);
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  if (recording_backward_) ++recorded_nodes_;
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Graph::wrap(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  Tensor t(n.shape, n.value);
  t.node = id;
  t.graph_id = id_;
  return t;
}

int Graph::import(const Tensor& t, bool as_leaf) {
  if (t.node >= 0 && !as_leaf) {
    if (t.graph_id != id_)
      throw std::invalid_argument("gmas: tensor belongs to a different graph (id " + std::to_string(t.graph_id) +
                                  ", expected " + std::to_string(id_) + ")");
    return t.node;
  }
  Node n;
  n.op = as_leaf ? Op::kLeaf : Op::kConst;
  n.shape = t.shape;
  n.value = t.data;
  return push(std::move(n));
}

Tensor Graph::leaf(const Tensor& value) { return wrap(import(value, /*as_leaf=*/true)); }

Tensor Graph::constant(const Tensor& value) {
  Tensor plain = value;
  plain.node = -1;
  return wrap(import(plain));
}

Tensor Graph::constant(double v) { return constant(Tensor::scalar(v)); }

Tensor Graph::binary_elementwise(Op op, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) shape_error(op_name(op), a, b);
  Node n;
  n.op = op;
  n.in = {import(a), import(b), -1};
  n.shape = a.shape;
  n.value.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    switch (op) {
      case Op::kAdd: n.value[i] = a.data[i] + b.data[i]; break;
      case Op::kSub: n.value[i] = a.data[i] - b.data[i]; break;
      case Op::kMul: n.value[i] = a.data[i] * b.data[i]; break;
      case Op::kDiv: n.value[i] = a.data[i] / b.data[i]; break;
      default: std::abort();
    }
  }
  return wrap(push(std::move(n)));
}

Tensor Graph::unary_elementwise(Op op, const Tensor& a) {
  Node n;
  n.op = op;
  n.in = {import(a), -1, -1};
  n.shape = a.shape;
  n.value.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    switch (op) {
      case Op::kTanh: n.value[i] = std::tanh(a.data[i]); break;
      case Op::kAbs: n.value[i] = std::fabs(a.data[i]); break;
      case Op::kSquare: n.value[i] = a.data[i] * a.data[i]; break;
      case Op::kExp: n.value[i] = std::exp(a.data[i]); break;
      default: std::abort();
    }
  }
  return wrap(push(std::move(n)));
}

Tensor Graph::add(const Tensor& a, const Tensor& b) { return binary_elementwise(Op::kAdd, a, b); }
Tensor Graph::sub(const Tensor& a, const Tensor& b) { return binary_elementwise(Op::kSub, a, b); }
Tensor Graph::mul(const Tensor& a, const Tensor& b) { return binary_elementwise(Op::kMul, a, b); }
Tensor Graph::div(const Tensor& a, const Tensor& b) { return binary_elementwise(Op::kDiv, a, b); }
Tensor Graph::tanh(const Tensor& a) { return unary_elementwise(Op::kTanh, a); }
Tensor Graph::abs(const Tensor& a) { return unary_elementwise(Op::kAbs, a); }
Tensor Graph::square(const Tensor& a) { return unary_elementwise(Op::kSquare, a); }
Tensor Graph::exp(const Tensor& a) { return unary_elementwise(Op::kExp, a); }

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) shape_error("matmul", a, "left operand must be rank 2");
  const int m = a.shape[0], k = a.shape[1];
  Node n;
  n.op = Op::kMatmul;
  if (b.rank() == 1) {
    if (b.shape[0] != k) shape_error("matmul", a, b);
    n.shape = {m};
    n.value.assign(static_cast<std::size_t>(m), 0.0);
    kern::matvec(a.data.data(), b.data.data(), n.value.data(), m, k);
  } else if (b.rank() == 2) {
    if (b.shape[0] != k) shape_error("matmul", a, b);
    const int cols = b.shape[1];
    n.shape = {m, cols};
    n.value.assign(static_cast<std::size_t>(m) * cols, 0.0);
    kern::matmul(a.data.data(), b.data.data(), n.value.data(), m, k, cols);
  } else {
    shape_error("matmul", b, "right operand must be rank 1 or 2");
  }
  n.in = {import(a), import(b), -1};
  return wrap(push(std::move(n)));
}

Tensor Graph::affine(const Tensor& w, const Tensor& x, const Tensor& b) {
  if (w.rank() != 2) shape_error("affine", w, "weight must be rank 2");
  const int m = w.shape[0], k = w.shape[1];
  if (b.rank() != 1 || b.shape[0] != m) shape_error("affine", w, b);
  Node n;
  n.op = Op::kAffine;
  if (x.rank() == 1) {
    if (x.shape[0] != k) shape_error("affine", w, x);
    n.shape = {m};
    n.value = b.data;
    kern::matvec(w.data.data(), x.data.data(), n.value.data(), m, k);
  } else if (x.rank() == 2) {
    if (x.shape[0] != k) shape_error("affine", w, x);
    const int cols = x.shape[1];
    n.shape = {m, cols};
    n.value.resize(static_cast<std::size_t>(m) * cols);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < cols; ++j) n.value[static_cast<std::size_t>(i) * cols + j] = b.data[static_cast<std::size_t>(i)];
    kern::matmul(w.data.data(), x.data.data(), n.value.data(), m, k, cols);
  } else {
    shape_error("affine", x, "input must be rank 1 or 2");
  }
  n.in = {import(w), import(x), import(b)};
  return wrap(push(std::move(n)));
}

Tensor Graph::sum(const Tensor& a) {
  Node n;
  n.op = Op::kSum;
  n.in = {import(a), -1, -1};
  double s = 0.0;
  for (double v : a.data) s += v;
  n.value = {s};
  return wrap(push(std::move(n)));
}

Tensor Graph::mean(const Tensor& a) {
  Node n;
  n.op = Op::kMean;
  n.in = {import(a), -1, -1};
  double s = 0.0;
  for (double v : a.data) s += v;
  n.value = {s / static_cast<double>(a.data.size())};
  return wrap(push(std::move(n)));
}

Tensor Graph::l2norm(const Tensor& a) {
  Node n;
  n.op = Op::kL2Norm;
  n.in = {import(a), -1, -1};
  double s = 0.0;
  for (double v : a.data) s += v * v;
  n.value = {std::sqrt(s)};
  return wrap(push(std::move(n)));
}

Tensor Graph::linf_norm(const Tensor& a) {
  Node n;
  n.op = Op::kLinfNorm;
  n.in = {import(a), -1, -1};
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  n.value = {m};
  return wrap(push(std::move(n)));
}

Tensor Graph::max_with_scalar(const Tensor& a, double c) {
  Node n;
  n.op = Op::kMaxWithScalar;
  n.in = {import(a), -1, -1};
  n.imm = c;
  n.shape = a.shape;
  n.value.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) n.value[i] = std::max(a.data[i], c);
  return wrap(push(std::move(n)));
}

Tensor Graph::dot(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) shape_error("dot", a, b);
  Node n;
  n.op = Op::kDot;
  n.in = {import(a), import(b), -1};
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  n.value = {s};
  return wrap(push(std::move(n)));
}

Tensor Graph::concat(const Tensor& a, const Tensor& b) {
  Node n;
  n.op = Op::kConcat;
  if (a.rank() == 1 && b.rank() == 1) {
    n.shape = {a.shape[0] + b.shape[0]};
  } else if (a.rank() == 2 && b.rank() == 2 && a.shape[1] == b.shape[1]) {
    n.shape = {a.shape[0] + b.shape[0], a.shape[1]};
  } else {
    shape_error("concat", a, b);
  }
  n.value = a.data;
  n.value.insert(n.value.end(), b.data.begin(), b.data.end());
  n.in = {import(a), import(b), -1};
  return wrap(push(std::move(n)));
}

Tensor Graph::scale(const Tensor& a, double c) {
  Node n;
  n.op = Op::kScale;
  n.in = {import(a), -1, -1};
  n.imm = c;
  n.shape = a.shape;
  n.value.resize(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) n.value[i] = c * a.data[i];
  return wrap(push(std::move(n)));
}

Tensor Graph::broadcast(const Tensor& s, const std::vector<int>& shape) {
  if (!s.is_scalar()) shape_error("broadcast", s, "source must be scalar");
  Node n;
  n.op = Op::kBroadcast;
  n.in = {import(s), -1, -1};
  n.shape = shape;
  std::int64_t numel = 1;
  for (int d : shape) numel *= d;
  n.value.assign(static_cast<std::size_t>(numel), s.data[0]);
  return wrap(push(std::move(n)));
}

Tensor Graph::slice(const Tensor& a, int off, int len) {
  Node n;
  n.op = Op::kSlice;
  n.off = off;
  int cols = 1;
  if (a.rank() == 1) {
    if (off < 0 || len <= 0 || off + len > a.shape[0]) shape_error("slice", a, "range out of bounds");
    n.shape = {len};
  } else if (a.rank() == 2) {
    if (off < 0 || len <= 0 || off + len > a.shape[0]) shape_error("slice", a, "row range out of bounds");
    cols = a.shape[1];
    n.shape = {len, cols};
  } else {
    shape_error("slice", a, "input must be rank 1 or 2");
  }
  n.value.assign(a.data.begin() + static_cast<std::ptrdiff_t>(off) * cols,
                 a.data.begin() + static_cast<std::ptrdiff_t>(off + len) * cols);
  n.in = {import(a), -1, -1};
  return wrap(push(std::move(n)));
}

Tensor Graph::transpose(const Tensor& a) {
  if (a.rank() != 2) shape_error("transpose", a, "input must be rank 2");
  const int m = a.shape[0], c = a.shape[1];
  Node n;
  n.op = Op::kTranspose;
  n.in = {import(a), -1, -1};
  n.shape = {c, m};
  n.value.resize(a.data.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < c; ++j) n.value[static_cast<std::size_t>(j) * m + i] = a.data[static_cast<std::size_t>(i) * c + j];
  return wrap(push(std::move(n)));
}

std::vector<char> Graph::depends_on(std::span<const int> roots, int upto) const {
  std::vector<char> needs(nodes_.size(), 0);
  for (int r : roots)
    if (r >= 0) needs[static_cast<std::size_t>(r)] = 1;
  for (int id = 0; id <= upto; ++id) {
    if (needs[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    for (int in : n.in)
      if (in >= 0 && needs[static_cast<std::size_t>(in)]) {
        needs[static_cast<std::size_t>(id)] = 1;
        break;
      }
  }
  return needs;
}

std::vector<double>& Graph::adj_buffer(std::vector<std::vector<double>>& adj, int id) const {
  auto& buf = adj[static_cast<std::size_t>(id)];
  if (buf.empty()) buf.assign(nodes_[static_cast<std::size_t>(id)].value.size(), 0.0);
  return buf;
}

void Graph::vjp_plain(int id, std::vector<std::vector<double>>& adj, const std::vector<char>& needs) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const std::vector<double>& g = adj[static_cast<std::size_t>(id)];
  const auto need = [&](int in) { return in >= 0 && needs[static_cast<std::size_t>(in)]; };
  const auto val = [&](int in) -> const std::vector<double>& { return nodes_[static_cast<std::size_t>(in)].value; };

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConst:
      break;
    case Op::kAdd: {
      for (int s = 0; s < 2; ++s)
        if (need(n.in[s])) {
          auto& d = adj_buffer(adj, n.in[s]);
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
      break;
    }
    case Op::kSub: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      if (need(n.in[1])) {
        auto& d = adj_buffer(adj, n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
      }
      break;
    }
    case Op::kMul: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& b = val(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * b[i];
      }
      if (need(n.in[1])) {
        auto& d = adj_buffer(adj, n.in[1]);
        const auto& a = val(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * a[i];
      }
      break;
    }
    case Op::kDiv: {
      const auto& b = val(n.in[1]);
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] / b[i];
      }
      if (need(n.in[1])) {
        auto& d = adj_buffer(adj, n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i] * n.value[i] / b[i];
      }
      break;
    }
    case Op::kMatmul: {
      const Node& a = nodes_[static_cast<std::size_t>(n.in[0])];
      const Node& b = nodes_[static_cast<std::size_t>(n.in[1])];
      const int m = a.shape[0], k = a.shape[1];
      if (b.shape.size() == 1) {
        if (need(n.in[0])) kern::outer(g.data(), b.value.data(), adj_buffer(adj, n.in[0]).data(), m, k);
        if (need(n.in[1])) kern::matvec_t(a.value.data(), g.data(), adj_buffer(adj, n.in[1]).data(), m, k);
      } else {
        const int cols = b.shape[1];
        if (need(n.in[0])) kern::matmul_a_bt(g.data(), b.value.data(), adj_buffer(adj, n.in[0]).data(), m, cols, k);
        if (need(n.in[1])) kern::matmul_at_b(a.value.data(), g.data(), adj_buffer(adj, n.in[1]).data(), m, k, cols);
      }
      break;
    }
    case Op::kAffine: {
      const Node& w = nodes_[static_cast<std::size_t>(n.in[0])];
      const Node& x = nodes_[static_cast<std::size_t>(n.in[1])];
      const int m = w.shape[0], k = w.shape[1];
      if (x.shape.size() == 1) {
        if (need(n.in[0])) kern::outer(g.data(), x.value.data(), adj_buffer(adj, n.in[0]).data(), m, k);
        if (need(n.in[1])) kern::matvec_t(w.value.data(), g.data(), adj_buffer(adj, n.in[1]).data(), m, k);
        if (need(n.in[2])) {
          auto& d = adj_buffer(adj, n.in[2]);
          for (int i = 0; i < m; ++i) d[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
        }
      } else {
        const int cols = x.shape[1];
        if (need(n.in[0])) kern::matmul_a_bt(g.data(), x.value.data(), adj_buffer(adj, n.in[0]).data(), m, cols, k);
        if (need(n.in[1])) kern::matmul_at_b(w.value.data(), g.data(), adj_buffer(adj, n.in[1]).data(), m, k, cols);
        if (need(n.in[2])) {
          auto& d = adj_buffer(adj, n.in[2]);
          for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += g[static_cast<std::size_t>(i) * cols + j];
            d[static_cast<std::size_t>(i)] += s;
          }
        }
      }
      break;
    }
    case Op::kTanh: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      }
      break;
    }
    case Op::kSum: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (auto& v : d) v += g[0];
      }
      break;
    }
    case Op::kMean: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const double gv = g[0] / static_cast<double>(d.size());
        for (auto& v : d) v += gv;
      }
      break;
    }
    case Op::kAbs: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& a = val(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * sign_of(a[i]);
      }
      break;
    }
    case Op::kSquare: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& a = val(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += 2.0 * g[i] * a[i];
      }
      break;
    }
    case Op::kL2Norm: {
      if (need(n.in[0]) && n.value[0] > 0.0) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& a = val(n.in[0]);
        const double gv = g[0] / n.value[0];
        for (std::size_t i = 0; i < a.size(); ++i) d[i] += gv * a[i];
      }
      break;
    }
    case Op::kLinfNorm: {
      if (need(n.in[0])) {
        const auto& a = val(n.in[0]);
        std::size_t k = 0;
        for (std::size_t i = 1; i < a.size(); ++i)
          if (std::fabs(a[i]) > std::fabs(a[k])) k = i;
        adj_buffer(adj, n.in[0])[k] += g[0] * sign_of(a[k]);
      }
      break;
    }
    case Op::kMaxWithScalar: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& a = val(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a[i] > n.imm) d[i] += g[i];
      }
      break;
    }
    case Op::kExp: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * n.value[i];
      }
      break;
    }
    case Op::kDot: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        const auto& b = val(n.in[1]);
        for (std::size_t i = 0; i < b.size(); ++i) d[i] += g[0] * b[i];
      }
      if (need(n.in[1])) {
        auto& d = adj_buffer(adj, n.in[1]);
        const auto& a = val(n.in[0]);
        for (std::size_t i = 0; i < a.size(); ++i) d[i] += g[0] * a[i];
      }
      break;
    }
    case Op::kConcat: {
      // row-major, so the flat split matches both rank-1 and rank-2 cases
      const std::size_t na = val(n.in[0]).size();
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < na; ++i) d[i] += g[i];
      }
      if (need(n.in[1])) {
        auto& d = adj_buffer(adj, n.in[1]);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[na + i];
      }
      break;
    }
    case Op::kScale: {
      if (need(n.in[0])) {
        auto& d = adj_buffer(adj, n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.imm * g[i];
      }
      break;
    }
    case Op::kBroadcast: {
      if (need(n.in[0])) {
        double s = 0.0;
        for (double v : g) s += v;
        adj_buffer(adj, n.in[0])[0] += s;
      }
      break;
    }
    case Op::kSlice: {
      if (need(n.in[0])) {
        const Node& a = nodes_[static_cast<std::size_t>(n.in[0])];
        const int cols = a.shape.size() == 2 ? a.shape[1] : 1;
        auto& d = adj_buffer(adj, n.in[0]);
        const std::size_t base = static_cast<std::size_t>(n.off) * cols;
        for (std::size_t i = 0; i < g.size(); ++i) d[base + i] += g[i];
      }
      break;
    }
    case Op::kTranspose: {
      if (need(n.in[0])) {
        const Node& a = nodes_[static_cast<std::size_t>(n.in[0])];
        const int m = a.shape[0], c = a.shape[1];
        auto& d = adj_buffer(adj, n.in[0]);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) d[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * m + i];
      }
      break;
    }
    case Op::kOpCount:
      std::abort();
  }
}

std::vector<Tensor> Graph::gradient(const Tensor& output, std::span<const Tensor> wrt) {
  if (!output.is_scalar())
    throw std::invalid_argument("gmas: gradient: output must be scalar, got shape " + shape_str(output.shape));
  if (output.node < 0 || output.graph_id != id_)
    throw std::invalid_argument("gmas: gradient: output is not a tensor of this graph");
  std::vector<int> roots;
  roots.reserve(wrt.size());
  for (const Tensor& t : wrt) {
    if (t.node < 0 || t.graph_id != id_)
      throw std::invalid_argument("gmas: gradient: wrt tensor is not part of this graph");
    roots.push_back(t.node);
  }
  const int out = output.node;
  const std::vector<char> needs = depends_on(roots, out);

  std::vector<std::vector<double>> adj(nodes_.size());
  adj[static_cast<std::size_t>(out)] = {1.0};
  for (int id = out; id >= 0; --id) {
    if (adj[static_cast<std::size_t>(id)].empty() || !needs[static_cast<std::size_t>(id)]) continue;
    vjp_plain(id, adj, needs);
  }

  std::vector<Tensor> out_grads;
  out_grads.reserve(wrt.size());
  for (const Tensor& t : wrt) {
    auto& buf = adj[static_cast<std::size_t>(t.node)];
    if (buf.empty())
      out_grads.push_back(Tensor::zeros(t.shape));
    else
      out_grads.push_back(Tensor(t.shape, std::move(buf)));
  }
  return out_grads;
}

Tensor Graph::gradient(const Tensor& output, const Tensor& wrt) {
  const Tensor wrts[1] = {wrt};
  return gradient(output, std::span<const Tensor>(wrts, 1))[0];
}

Tensor Graph::jacobian(const Tensor& output, const Tensor& wrt) {
  if (output.rank() != 1)
    throw std::invalid_argument("gmas: jacobian: output must be rank 1, got shape " + shape_str(output.shape));
  if (output.node < 0 || output.graph_id != id_ || wrt.node < 0 || wrt.graph_id != id_)
    throw std::invalid_argument("gmas: jacobian: tensors must be part of this graph");
  const int out = output.node;
  const int m = output.shape[0];
  const int w = static_cast<int>(wrt.numel());
  const int roots[1] = {wrt.node};
  const std::vector<char> needs = depends_on(std::span<const int>(roots, 1), out);

  Tensor jac = Tensor::zeros({m, w});
  for (int row = 0; row < m; ++row) {
    std::vector<std::vector<double>> adj(nodes_.size());
    auto& seed = adj[static_cast<std::size_t>(out)];
    seed.assign(static_cast<std::size_t>(m), 0.0);
    seed[static_cast<std::size_t>(row)] = 1.0;
    for (int id = out; id >= 0; --id) {
      if (adj[static_cast<std::size_t>(id)].empty() || !needs[static_cast<std::size_t>(id)]) continue;
      vjp_plain(id, adj, needs);
    }
    const auto& buf = adj[static_cast<std::size_t>(wrt.node)];
    if (!buf.empty())
      for (int c = 0; c < w; ++c) jac.data[static_cast<std::size_t>(row) * w + c] = buf[static_cast<std::size_t>(c)];
  }
  return jac;
}

// Emits the contribution of output-adjoint `adj_id` to input slot `slot` of
// node `id`, as graph nodes. Returns the new node id, or -1 for a structurally
// zero contribution.
int Graph::vjp_record(int id, int slot, int adj_id) {
  const Node n = nodes_[static_cast<std::size_t>(id)];  // copy: nodes_ may reallocate below
  const Tensor g = wrap(adj_id);
  const auto in_tensor = [&](int s) { return wrap(n.in[s]); };
  const auto y_tensor = [&]() { return wrap(id); };

  switch (n.op) {
    case Op::kAdd:
      return adj_id;
    case Op::kSub:
      return slot == 0 ? adj_id : scale(g, -1.0).node;
    case Op::kMul:
      return mul(g, in_tensor(slot == 0 ? 1 : 0)).node;
    case Op::kDiv: {
      if (slot == 0) return div(g, in_tensor(1)).node;
      return scale(div(mul(g, y_tensor()), in_tensor(1)), -1.0).node;
    }
    case Op::kMatmul: {
      const Tensor a = in_tensor(0);
      const Tensor b = in_tensor(1);
      if (slot == 1) return matmul(transpose(a), g).node;
      if (b.rank() == 2) return matmul(g, transpose(b)).node;
      throw std::runtime_error(
          "gmas: no second-order adjoint registered for op 'matmul' (left operand with rank-1 right operand)");
    }
    case Op::kAffine: {
      const Tensor w = in_tensor(0);
      const Tensor x = in_tensor(1);
      if (slot == 1) return matmul(transpose(w), g).node;
      if (slot == 2) {
        if (x.rank() == 1) return adj_id;
        return matmul(g, constant(Tensor::full({x.shape[1]}, 1.0))).node;
      }
      if (x.rank() == 2) return matmul(g, transpose(x)).node;
      throw std::runtime_error(
          "gmas: no second-order adjoint registered for op 'affine' (weight slot with rank-1 input)");
    }
    case Op::kTanh: {
      const Tensor y = y_tensor();
      const Tensor one = constant(Tensor::full(y.shape, 1.0));
      return mul(g, sub(one, mul(y, y))).node;
    }
    case Op::kSum:
      return broadcast(g, nodes_[static_cast<std::size_t>(n.in[0])].shape).node;
    case Op::kMean: {
      const auto& ishape = nodes_[static_cast<std::size_t>(n.in[0])].shape;
      std::int64_t numel = 1;
      for (int d : ishape) numel *= d;
      return scale(broadcast(g, ishape), 1.0 / static_cast<double>(numel)).node;
    }
    case Op::kAbs: {
      const auto& a = nodes_[static_cast<std::size_t>(n.in[0])];
      Tensor mask(a.shape, a.value);
      for (auto& v : mask.data) v = sign_of(v);
      return mul(g, constant(mask)).node;
    }
    case Op::kSquare:
      return mul(g, scale(in_tensor(0), 2.0)).node;
    case Op::kL2Norm: {
      if (n.value[0] <= 0.0) return -1;  // subgradient 0 at the kink
      const std::vector<int> ishape = nodes_[static_cast<std::size_t>(n.in[0])].shape;
      const Tensor gb = broadcast(g, ishape);
      const Tensor yb = broadcast(y_tensor(), ishape);
      return div(mul(gb, in_tensor(0)), yb).node;
    }
    case Op::kLinfNorm: {
      const auto& a = nodes_[static_cast<std::size_t>(n.in[0])];
      std::size_t k = 0;
      for (std::size_t i = 1; i < a.value.size(); ++i)
        if (std::fabs(a.value[i]) > std::fabs(a.value[k])) k = i;
      Tensor mask = Tensor::zeros(a.shape);
      mask.data[k] = sign_of(a.value[k]);
      return mul(broadcast(g, a.shape), constant(mask)).node;
    }
    case Op::kMaxWithScalar: {
      const auto& a = nodes_[static_cast<std::size_t>(n.in[0])];
      Tensor mask = Tensor::zeros(a.shape);
      for (std::size_t i = 0; i < a.value.size(); ++i) mask.data[i] = a.value[i] > n.imm ? 1.0 : 0.0;
      return mul(g, constant(mask)).node;
    }
    case Op::kExp:
      return mul(g, y_tensor()).node;
    case Op::kDot: {
      const auto& ishape = nodes_[static_cast<std::size_t>(n.in[0])].shape;
      return mul(broadcast(g, ishape), in_tensor(slot == 0 ? 1 : 0)).node;
    }
    case Op::kConcat: {
      const auto& a = nodes_[static_cast<std::size_t>(n.in[0])];
      const auto& b = nodes_[static_cast<std::size_t>(n.in[1])];
      const int ra = a.shape[0], rb = b.shape[0];
      return slot == 0 ? slice(g, 0, ra).node : slice(g, ra, rb).node;
    }
    case Op::kScale:
      return scale(g, n.imm).node;
    case Op::kBroadcast:
      return sum(g).node;
    case Op::kSlice: {
      const std::vector<int> in_shape = nodes_[static_cast<std::size_t>(n.in[0])].shape;
      const int total = in_shape[0];
      const int len = nodes_[static_cast<std::size_t>(id)].shape[0];
      const int after = total - n.off - len;
      Tensor padded = g;
      if (n.off > 0) {
        std::vector<int> zshape = in_shape;
        zshape[0] = n.off;
        padded = concat(constant(Tensor::zeros(zshape)), padded);
      }
      if (after > 0) {
        std::vector<int> zshape = in_shape;
        zshape[0] = after;
        padded = concat(padded, constant(Tensor::zeros(zshape)));
      }
      return padded.node;
    }
    case Op::kTranspose:
      return transpose(g).node;
    case Op::kLeaf:
    case Op::kConst:
    case Op::kOpCount:
      break;
  }
  std::abort();
}

Tensor Graph::gradient_as_graph(const Tensor& output, const Tensor& wrt) {
  if (!output.is_scalar())
    throw std::invalid_argument("gmas: gradient_as_graph: output must be scalar, got shape " + shape_str(output.shape));
  if (output.node < 0 || output.graph_id != id_ || wrt.node < 0 || wrt.graph_id != id_)
    throw std::invalid_argument("gmas: gradient_as_graph: tensors must be part of this graph");
  const int out = output.node;
  const int roots[1] = {wrt.node};
  const std::vector<char> needs = depends_on(std::span<const int>(roots, 1), out);
  if (!needs[static_cast<std::size_t>(out)]) return constant(Tensor::zeros(wrt.shape));

  struct RecordingScope {
    Graph& g;
    explicit RecordingScope(Graph& graph) : g(graph) { g.recording_backward_ = true; }
    ~RecordingScope() { g.recording_backward_ = false; }
  } scope(*this);

  std::vector<int> adjn(static_cast<std::size_t>(out) + 1, -1);
  adjn[static_cast<std::size_t>(out)] = constant(Tensor::scalar(1.0)).node;
  for (int id = out; id >= 0; --id) {
    const int a = adjn[static_cast<std::size_t>(id)];
    if (a < 0 || !needs[static_cast<std::size_t>(id)]) continue;
    if (id == wrt.node) continue;  // stop: wrt is the independent variable
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const std::array<int, 3> ins = n.in;
    for (int slot = 0; slot < 3; ++slot) {
      const int in = ins[static_cast<std::size_t>(slot)];
      if (in < 0 || !needs[static_cast<std::size_t>(in)]) continue;
      const int contrib = vjp_record(id, slot, a);
      if (contrib < 0) continue;
      int& acc = adjn[static_cast<std::size_t>(in)];
      acc = acc < 0 ? contrib : add(wrap(acc), wrap(contrib)).node;
    }
  }
  const int result = adjn[static_cast<std::size_t>(wrt.node)];
  return result >= 0 ? wrap(result) : constant(Tensor::zeros(wrt.shape));
}

}  // namespace gmas
