// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Agent parameter sets and the representation-side losses: a shared encoder
// maps 48x48 observations into a small abstract state x, on which the
// model-free Q head and the model-based reward / discount / transition heads
// all operate. The discount head doubles as the terminal-state predictor.
//
// tanh activations throughout: the gradient-matching loss differentiates
// twice through the encoder and Q head, and piecewise-linear activations
// would leave it with an almost-everywhere-zero second derivative.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gmas/graph.hpp"
#include "gmas/maze.hpp"
#include "gmas/replay.hpp"

namespace gmas {

struct ArchConfig {
  int obs_dim = maze::kObsDim;
  int n_x = 3;  // abstract state dimension
  int n_actions = maze::kNumActions;
  int enc_h1 = 200;
  int enc_h2 = 100;
  int head_h1 = 50;
  int head_h2 = 20;
  int tau_h = 32;
};

enum class QWhich { kLive, kFrozen };

struct AgentNets {
  ArchConfig arch;
  // live parameters plus the frozen Q copy under the "q_frozen." prefix;
  // the frozen copy is only ever written by sync_frozen()
  std::map<std::string, Tensor> params;

  static AgentNets init(const ArchConfig& arch, std::uint64_t seed);
  static AgentNets from_params(std::map<std::string, Tensor> params);

  void sync_frozen();
  // every parameter name except the frozen copy; these receive gradients
  std::vector<std::string> live_names() const;
  const Tensor& p(const std::string& name) const;
};

// ---- plain value evaluation (no graph; used by the planner and evaluation)

std::vector<double> encode(const AgentNets& nets, std::span<const float> obs);
std::vector<double> q_values(const AgentNets& nets, QWhich which, std::span<const double> x);
double predict_reward(const AgentNets& nets, std::span<const double> x, int action);
double predict_discount(const AgentNets& nets, std::span<const double> x, int action);
// residual transition: x + tau(x, a)
std::vector<double> predict_next(const AgentNets& nets, std::span<const double> x, int action);

// ---- derivatives w.r.t. the abstract state (small dedicated graphs)

std::vector<double> q_grad_x(const AgentNets& nets, QWhich which, std::span<const double> x, int action);
std::vector<double> reward_grad_x(const AgentNets& nets, std::span<const double> x, int action);
std::vector<double> discount_grad_x(const AgentNets& nets, std::span<const double> x, int action);
// Jacobian of tau(x, a) w.r.t. x, row-major [n_x, n_x]
Tensor tau_jacobian_x(const AgentNets& nets, std::span<const double> x, int action);

// ---- graph-side builders for training

// leaf handles for every live parameter, shared across one training graph
struct BoundParams {
  std::map<std::string, Tensor> handles;
  const Tensor& operator()(const std::string& name) const;
};
BoundParams bind_live(Graph& g, const AgentNets& nets);

// obs is [obs_dim] or [obs_dim, B]; result [n_x] or [n_x, B]
Tensor encode_g(Graph& g, const BoundParams& p, const Tensor& obs);
// x is [n_x] or [n_x, B]; result [n_actions] or [n_actions, B]
Tensor q_values_g(Graph& g, const BoundParams& p, const Tensor& x);
// xa = x concatenated with the action one-hot, [n_x + A] or [n_x + A, B]
Tensor reward_g(Graph& g, const BoundParams& p, const Tensor& xa);
Tensor discount_g(Graph& g, const BoundParams& p, const Tensor& xa);  // squashed into [0, 1]
Tensor tau_g(Graph& g, const BoundParams& p, const Tensor& xa);

// constant tensors for one sampled batch
struct BatchData {
  Tensor obs;        // [obs_dim, B]
  Tensor next_obs;   // [obs_dim, B]
  Tensor onehot;     // [A, B]
  Tensor rewards;    // [1, B]
  Tensor discounts;  // [1, B]
  std::vector<int> actions;
  std::vector<std::int64_t> indices;
};
BatchData make_batch(const ReplayBuffer& buffer, std::span<const std::int64_t> idx);

// column j of a [m, B] graph tensor as a [m] graph tensor
Tensor col_of(Graph& g, const Tensor& matrix, int j);
// mean over a list of scalar graph tensors
Tensor mean_of(Graph& g, std::span<const Tensor> scalars);

struct CrarLossNodes {
  Tensor reward;      // mean |r - rho(x, a)|
  Tensor discount;    // mean |gamma - g(x, a)|
  Tensor transition;  // mean per-coordinate |x + tau(x, a) - x'|
};
CrarLossNodes loss_crar(Graph& g, const BoundParams& p, const BatchData& batch, const Tensor& x,
                        const Tensor& x_next);

// mean over pairs of exp(-c_d * ||x1_i - x2_i||_2); x1/x2 are [n_x] or [n_x, B]
Tensor loss_entropy(Graph& g, const Tensor& x1, const Tensor& x2, double c_d);
// mean over columns of max(||x_i||_inf - 1, 0)
Tensor loss_linf(Graph& g, const Tensor& x);

// Double-DQN targets, no gradient flow: live Q selects the argmax action on
// the encoded next state, the frozen copy evaluates it.
// x_next_values is the row-major [n_x, B] value buffer of the encoded next
// states (typically the value of the x_next graph node).
std::vector<double> ddqn_target(const AgentNets& nets, const BatchData& batch,
                                std::span<const double> x_next_values);

// per-sample Q(x_i, a_i) as a [1, B] graph tensor (one-hot mask contraction)
Tensor q_selected_g(Graph& g, const BoundParams& p, const Tensor& q_all, const BatchData& batch);

}  // namespace gmas
