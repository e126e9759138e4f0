// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient matching in the abstract space. The planner's slope w.r.t. the
// abstract state is estimated recursively through the learned model (with the
// frozen Q providing every Q term), depth-averaged, and used as a constant
// per-sample target. The matching loss penalizes the distance between that
// target and the live model-free slope dQ(x, a)/dx, which is built with
// gradient_as_graph so the loss differentiates through both the Q head and
// the encoder.

#pragma once

#include <span>
#include <vector>

#include "gmas/nets.hpp"
#include "gmas/planner.hpp"

namespace gmas {

enum class DistanceKind { kCosine, kL2 };

// cosine: 1 - <u,v>/(|u||v|), in [0, 2]; l2: |u - v|_2.
// A cosine distance against a near-zero vector (either side below 1e-8) is
// defined as the neutral value 1.
double distance(std::span<const double> u, std::span<const double> v, DistanceKind kind);
Tensor distance_g(Graph& g, const Tensor& u, const Tensor& v, DistanceKind kind);

// Slope of the depth-d planner estimate w.r.t. the abstract state, following
// the supplied backup actions (one per level, depth d first). All Q terms use
// the frozen copy. best_actions must hold exactly `depth` entries.
std::vector<double> grad_at_depth(std::span<const double> x, int action, int depth, const AgentNets& nets,
                                  std::span<const int> best_actions, PlanConfig::JacobianMode mode,
                                  int branching = maze::kNumActions);
// Convenience form that runs the planner backup itself.
std::vector<double> grad_at_depth(std::span<const double> x, int action, int depth, const AgentNets& nets,
                                  PlanConfig::JacobianMode mode, int branching = maze::kNumActions);

// Depth-averaged slope target. With gamma_prime set, the depth-d term is
// weighted by gamma_prime^d and the result renormalized by the weight sum;
// otherwise the denominator follows cfg.denominator.
std::vector<double> grad_plan(std::span<const double> x, int action, const PlanConfig& cfg, const AgentNets& nets);

struct ModelFreeLossNodes {
  Tensor total;     // td + gmas
  Tensor td;        // mean squared double-DQN error
  Tensor gmas;      // alpha-scaled mean slope distance (constant 0 when alpha == 0)
};

// alpha * mean_i dist(grad_plan(x_i, a_i), dQ(x_i, a_i)/dx_i). The target
// side carries no graph linkage; the live side differentiates w.r.t. theta_Q
// and, through x_i, theta_e.
Tensor loss_gmas(Graph& g, const BoundParams& p, const AgentNets& nets, const BatchData& batch, const Tensor& x,
                 const PlanConfig& cfg, double alpha, DistanceKind kind);

// Mean squared TD error against the double-DQN targets plus the matching
// term; alpha = 0 recovers the plain model-free loss and builds no
// second-order nodes.
ModelFreeLossNodes loss_modelfree_total(Graph& g, const BoundParams& p, const AgentNets& nets, const BatchData& batch,
                                        const Tensor& x, std::span<const double> targets, const PlanConfig& cfg,
                                        double alpha, DistanceKind kind);

}  // namespace gmas
