// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/gradmatch.hpp"

#include <cmath>
#include <stdexcept>

namespace gmas {

namespace {

constexpr double kDegenerateNorm = 1e-8;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// recursion body shared by the public grad_at_depth entry points; pulls
// per-depth Q values out of an already-backed-up tree
std::vector<double> grad_rec(const PlanTree& tree, int node_idx, int action, int remaining, const AgentNets& nets,
                             std::span<const int> path, PlanConfig::JacobianMode mode) {
  const PlanTree::Node& node = tree.nodes[static_cast<std::size_t>(node_idx)];
  if (remaining == 0) return q_grad_x(nets, QWhich::kFrozen, node.x, action);

  const PlanTree::Edge& edge = node.edges.at(static_cast<std::size_t>(action));
  const int a2 = path[0];
  const auto& child_q = tree.nodes[static_cast<std::size_t>(edge.child)].q[static_cast<std::size_t>(remaining - 1)];
  const double max_q = child_q.at(static_cast<std::size_t>(a2));

  std::vector<double> grad = reward_grad_x(nets, node.x, action);
  const std::vector<double> dg = discount_grad_x(nets, node.x, action);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += dg[i] * max_q;

  const std::vector<double> g_next = grad_rec(tree, edge.child, a2, remaining - 1, nets, path.subspan(1), mode);
  const Tensor jac = tau_jacobian_x(nets, node.x, action);  // [n_x, n_x]
  const int nx = nets.arch.n_x;
  for (int j = 0; j < nx; ++j) {
    double s = mode == PlanConfig::JacobianMode::kResidual ? g_next[static_cast<std::size_t>(j)] : 0.0;
    for (int i = 0; i < nx; ++i) s += jac.data[static_cast<std::size_t>(i) * nx + j] * g_next[static_cast<std::size_t>(i)];
    grad[static_cast<std::size_t>(j)] += edge.discount * s;
  }
  return grad;
}

}  // namespace

double distance(std::span<const double> u, std::span<const double> v, DistanceKind kind) {
  if (u.size() != v.size()) throw std::invalid_argument("gmas: distance between vectors of different lengths");
  if (kind == DistanceKind::kL2) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
    return std::sqrt(s);
  }
  const double nu = norm2(u), nv = norm2(v);
  if (nu < kDegenerateNorm || nv < kDegenerateNorm) return 1.0;
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) d += u[i] * v[i];
  return 1.0 - d / (nu * nv);
}

Tensor distance_g(Graph& g, const Tensor& u, const Tensor& v, DistanceKind kind) {
  if (!same_shape(u, v))
    throw std::invalid_argument("gmas: distance_g: shape mismatch " + shape_str(u.shape) + " vs " + shape_str(v.shape));
  if (kind == DistanceKind::kL2) return g.l2norm(g.sub(u, v));
  if (norm2(u.data) < kDegenerateNorm || norm2(v.data) < kDegenerateNorm) return g.constant(1.0);
  const Tensor cosim = g.div(g.dot(u, v), g.mul(g.l2norm(u), g.l2norm(v)));
  return g.sub(g.constant(1.0), cosim);
}

std::vector<double> grad_at_depth(std::span<const double> x, int action, int depth, const AgentNets& nets,
                                  std::span<const int> best_actions, PlanConfig::JacobianMode mode, int branching) {
  if (depth < 0) throw std::invalid_argument("gmas: grad_at_depth needs depth >= 0");
  if (static_cast<int>(best_actions.size()) != depth)
    throw std::invalid_argument("gmas: grad_at_depth needs one backup action per level, got " +
                                std::to_string(best_actions.size()) + " for depth " + std::to_string(depth));
  const PlanTree tree = expand(x, depth, nets, QWhich::kFrozen, branching);
  return grad_rec(tree, 0, action, depth, nets, best_actions, mode);
}

std::vector<double> grad_at_depth(std::span<const double> x, int action, int depth, const AgentNets& nets,
                                  PlanConfig::JacobianMode mode, int branching) {
  std::vector<int> path;
  if (depth >= 1) path = best_actions(x, action, depth, nets, QWhich::kFrozen, branching);
  return grad_at_depth(x, action, depth, nets, path, mode, branching);
}

std::vector<double> grad_plan(std::span<const double> x, int action, const PlanConfig& cfg, const AgentNets& nets) {
  const PlanTree tree = expand(x, cfg.depth, nets, QWhich::kFrozen, cfg.branching);
  const int nx = nets.arch.n_x;
  std::vector<double> acc(static_cast<std::size_t>(nx), 0.0);
  double weight_sum = 0.0;
  for (int d = 0; d <= cfg.depth; ++d) {
    std::vector<int> path;
    if (d >= 1) path = tree.best_action_path(action, d);
    const std::vector<double> gd = grad_rec(tree, 0, action, d, nets, path, cfg.jacobian_mode);
    const double w = cfg.gamma_prime ? std::pow(*cfg.gamma_prime, static_cast<double>(d)) : 1.0;
    for (int i = 0; i < nx; ++i) acc[static_cast<std::size_t>(i)] += w * gd[static_cast<std::size_t>(i)];
    weight_sum += w;
  }
  double denom = weight_sum;
  if (!cfg.gamma_prime && cfg.denominator == PlanConfig::Denominator::kPaperLiteral) {
    if (cfg.depth == 0) throw std::invalid_argument("gmas: the literal grad_plan denominator is undefined at depth 0");
    denom = static_cast<double>(cfg.depth);
  }
  for (auto& v : acc) v /= denom;
  return acc;
}

Tensor loss_gmas(Graph& g, const BoundParams& p, const AgentNets& nets, const BatchData& batch, const Tensor& x,
                 const PlanConfig& cfg, double alpha, DistanceKind kind) {
  if (alpha <= 0.0) throw std::invalid_argument("gmas: loss_gmas needs alpha > 0");
  const int b = static_cast<int>(batch.actions.size());
  const int nx = nets.arch.n_x;
  std::vector<Tensor> terms;
  terms.reserve(static_cast<std::size_t>(b));
  std::vector<double> x_val(static_cast<std::size_t>(nx));
  for (int i = 0; i < b; ++i) {
    for (int k = 0; k < nx; ++k) x_val[static_cast<std::size_t>(k)] = x.data[static_cast<std::size_t>(k) * b + i];
    const int a = batch.actions[static_cast<std::size_t>(i)];

    // constant target from the frozen-Q planner slope
    const std::vector<double> target = grad_plan(x_val, a, cfg, nets);

    // live slope dQ(x_i, a)/dx_i, kept differentiable w.r.t. theta_Q and x_i
    const Tensor x_i = col_of(g, x, i);
    const Tensor q_i = q_values_g(g, p, x_i);
    Tensor pick = Tensor::zeros({nets.arch.n_actions});
    pick.data[static_cast<std::size_t>(a)] = 1.0;
    const Tensor q_sel = g.dot(q_i, g.constant(pick));
    const Tensor live = g.gradient_as_graph(q_sel, x_i);

    terms.push_back(distance_g(g, live, g.constant(Tensor::vec({target.begin(), target.end()})), kind));
  }
  return g.scale(mean_of(g, terms), alpha);
}

ModelFreeLossNodes loss_modelfree_total(Graph& g, const BoundParams& p, const AgentNets& nets, const BatchData& batch,
                                        const Tensor& x, std::span<const double> targets, const PlanConfig& cfg,
                                        double alpha, DistanceKind kind) {
  const int b = static_cast<int>(batch.actions.size());
  if (static_cast<int>(targets.size()) != b)
    throw std::invalid_argument("gmas: loss_modelfree_total needs one target per batch entry");
  ModelFreeLossNodes out;
  const Tensor q_all = q_values_g(g, p, x);
  const Tensor q_sel = q_selected_g(g, p, q_all, batch);
  const Tensor y = g.constant(Tensor({1, b}, {targets.begin(), targets.end()}));
  out.td = g.mean(g.square(g.sub(q_sel, y)));
  if (alpha > 0.0) {
    out.gmas = loss_gmas(g, p, nets, batch, x, cfg, alpha, kind);
    out.total = g.add(out.td, out.gmas);
  } else {
    out.gmas = g.constant(0.0);
    out.total = out.td;
  }
  return out;
}

}  // namespace gmas
