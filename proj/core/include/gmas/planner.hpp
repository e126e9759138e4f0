// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Depth-d value expansion and backup over the abstract space. A PlanTree
// expands every action branch to the requested depth using the learned
// reward / discount / transition heads; backup folds max-Q values toward the
// root, giving the per-depth estimates that both acting and the
// gradient-matching targets consume.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gmas/nets.hpp"

namespace gmas {

struct PlanConfig {
  int depth = 0;  // D: number of imagined transition steps
  int branching = maze::kNumActions;
  enum class Denominator {
    kDepthPlusOne,   // true mean over the D+1 per-depth estimates
    kPaperLiteral,   // divide by D; undefined at D = 0, same argmax otherwise
  };
  Denominator denominator = Denominator::kDepthPlusOne;
  enum class JacobianMode {
    kResidual,      // d(next)/dx = I + d(tau)/dx, consistent with the residual transition
    kPaperLiteral,  // d(tau)/dx alone
  };
  JacobianMode jacobian_mode = JacobianMode::kResidual;
  // optional per-depth discounting of gradient estimates, weights gamma'^d
  std::optional<double> gamma_prime;
};

struct PlanTree {
  struct Edge {
    double reward = 0.0;
    double discount = 0.0;
    int child = -1;
  };
  struct Node {
    std::vector<double> x;
    int level = 0;
    std::vector<Edge> edges;            // one per action; empty at the frontier
    std::vector<std::vector<double>> q; // q[k][a]: depth-k estimate at this node
  };
  std::vector<Node> nodes;  // node 0 is the root, children follow in BFS order
  int depth = 0;
  int branching = 0;

  double q_at(int action, int d) const { return nodes[0].q[static_cast<std::size_t>(d)][static_cast<std::size_t>(action)]; }
  // a'' along the greedy backup path for (root, action, d); entry 0 is the
  // choice at remaining depth d, entry d-1 the choice at depth 1
  std::vector<int> best_action_path(int action, int d) const;
};

// Expands the full tree to `depth` and runs the backup. The restricted
// action set at each backup level is the top-`branching` children ranked by
// their depth-(k-1) estimate.
PlanTree expand(std::span<const double> x, int depth, const AgentNets& nets, QWhich which, int branching);

// Depth-d estimated return for (x, a).
double q_at_depth(std::span<const double> x, int action, int d, const AgentNets& nets, QWhich which,
                  int branching = maze::kNumActions);

// Average of the depth-0..D estimates (the acting value).
double q_plan(std::span<const double> x, int action, const PlanConfig& cfg, const AgentNets& nets, QWhich which);

// Greedy action under q_plan; ties break toward the lowest action index.
int act(std::span<const double> x, const PlanConfig& cfg, const AgentNets& nets, QWhich which = QWhich::kLive);

// Backup argmax actions for (x, a, d), as consumed by the gradient recursion.
std::vector<int> best_actions(std::span<const double> x, int action, int d, const AgentNets& nets, QWhich which,
                              int branching = maze::kNumActions);

// max over the top-b entries of `values` (ties toward the lowest index);
// shared by backup and by the gradient recursion's middle term
int backup_argmax(std::span<const double> values, int branching);

}  // namespace gmas
