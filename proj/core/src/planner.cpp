// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/planner.hpp"

#include <algorithm>
#include <stdexcept>

namespace gmas {

int backup_argmax(std::span<const double> values, int branching) {
  const int n = static_cast<int>(values.size());
  if (branching <= 0 || branching > n)
    throw std::invalid_argument("gmas: branching must be in [1, " + std::to_string(n) + "]");
  // rank actions by value, keep the top-b, then take the best of that set
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)]; });
  int best = order[0];
  for (int i = 1; i < branching; ++i)
    if (values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] > values[static_cast<std::size_t>(best)])
      best = order[static_cast<std::size_t>(i)];
  // stable_sort keeps equal values in index order, so ties already resolve
  // toward the lowest action index
  return best;
}

PlanTree expand(std::span<const double> x, int depth, const AgentNets& nets, QWhich which, int branching) {
  if (depth < 0) throw std::invalid_argument("gmas: planning depth must be >= 0");
  const int n_actions = nets.arch.n_actions;
  if (branching <= 0 || branching > n_actions)
    throw std::invalid_argument("gmas: branching must be in [1, " + std::to_string(n_actions) + "]");

  PlanTree tree;
  tree.depth = depth;
  tree.branching = branching;

  PlanTree::Node root;
  root.x.assign(x.begin(), x.end());
  root.level = 0;
  tree.nodes.push_back(std::move(root));

  // breadth-first expansion of every action branch down to `depth`
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].level == depth) continue;
    for (int a = 0; a < n_actions; ++a) {
      PlanTree::Edge edge;
      edge.reward = predict_reward(nets, tree.nodes[i].x, a);
      edge.discount = predict_discount(nets, tree.nodes[i].x, a);
      PlanTree::Node child;
      child.x = predict_next(nets, tree.nodes[i].x, a);
      child.level = tree.nodes[i].level + 1;
      edge.child = static_cast<int>(tree.nodes.size());
      tree.nodes[i].edges.push_back(edge);
      tree.nodes.push_back(std::move(child));
    }
  }

  // backup, children before parents
  for (std::size_t ri = tree.nodes.size(); ri-- > 0;) {
    PlanTree::Node& node = tree.nodes[ri];
    const int levels = depth - node.level;  // highest usable estimate depth here
    node.q.resize(static_cast<std::size_t>(levels) + 1);
    node.q[0] = q_values(nets, which, node.x);
    for (int k = 1; k <= levels; ++k) {
      auto& qk = node.q[static_cast<std::size_t>(k)];
      qk.resize(static_cast<std::size_t>(n_actions));
      for (int a = 0; a < n_actions; ++a) {
        const PlanTree::Edge& e = node.edges[static_cast<std::size_t>(a)];
        const auto& child_q = tree.nodes[static_cast<std::size_t>(e.child)].q[static_cast<std::size_t>(k - 1)];
        const int a2 = backup_argmax(child_q, branching);
        qk[static_cast<std::size_t>(a)] = e.reward + e.discount * child_q[static_cast<std::size_t>(a2)];
      }
    }
  }
  return tree;
}

std::vector<int> PlanTree::best_action_path(int action, int d) const {
  if (d < 1 || d > depth) throw std::invalid_argument("gmas: best_action_path needs 1 <= d <= tree depth");
  std::vector<int> path;
  path.reserve(static_cast<std::size_t>(d));
  int node = 0;
  int a = action;
  for (int k = d; k >= 1; --k) {
    const int child = nodes[static_cast<std::size_t>(node)].edges[static_cast<std::size_t>(a)].child;
    const auto& child_q = nodes[static_cast<std::size_t>(child)].q[static_cast<std::size_t>(k - 1)];
    const int a2 = backup_argmax(child_q, branching);
    path.push_back(a2);
    node = child;
    a = a2;
  }
  return path;
}

double q_at_depth(std::span<const double> x, int action, int d, const AgentNets& nets, QWhich which, int branching) {
  return expand(x, d, nets, which, branching).q_at(action, d);
}

double q_plan(std::span<const double> x, int action, const PlanConfig& cfg, const AgentNets& nets, QWhich which) {
  const PlanTree tree = expand(x, cfg.depth, nets, which, cfg.branching);
  double sum = 0.0;
  for (int d = 0; d <= cfg.depth; ++d) sum += tree.q_at(action, d);
  if (cfg.denominator == PlanConfig::Denominator::kPaperLiteral) {
    if (cfg.depth == 0)
      throw std::invalid_argument("gmas: the literal q_plan denominator is undefined at depth 0");
    return sum / static_cast<double>(cfg.depth);
  }
  return sum / static_cast<double>(cfg.depth + 1);
}

int act(std::span<const double> x, const PlanConfig& cfg, const AgentNets& nets, QWhich which) {
  const PlanTree tree = expand(x, cfg.depth, nets, which, cfg.branching);
  const double denom = cfg.denominator == PlanConfig::Denominator::kPaperLiteral
                           ? static_cast<double>(cfg.depth)
                           : static_cast<double>(cfg.depth + 1);
  if (denom <= 0.0) throw std::invalid_argument("gmas: the literal q_plan denominator is undefined at depth 0");
  int best = 0;
  double best_value = 0.0;
  for (int a = 0; a < nets.arch.n_actions; ++a) {
    double sum = 0.0;
    for (int d = 0; d <= cfg.depth; ++d) sum += tree.q_at(a, d);
    const double value = sum / denom;
    if (a == 0 || value > best_value) {
      best = a;
      best_value = value;
    }
  }
  return best;
}

std::vector<int> best_actions(std::span<const double> x, int action, int d, const AgentNets& nets, QWhich which,
                              int branching) {
  if (d < 1) throw std::invalid_argument("gmas: best_actions needs d >= 1");
  return expand(x, d, nets, which, branching).best_action_path(action, d);
}

}  // namespace gmas
