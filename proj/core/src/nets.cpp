// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "gmas/rng.hpp"

namespace gmas {

namespace {

Tensor init_matrix(Rng& rng, int rows, int cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor w = Tensor::zeros({rows, cols});
  for (auto& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

Tensor init_bias(Rng& rng, int rows, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor b = Tensor::zeros({rows});
  for (auto& v : b.data) v = rng.uniform(-bound, bound);
  return b;
}

void add_layer(std::map<std::string, Tensor>& params, Rng& rng, const std::string& name, int out_dim, int in_dim) {
  params.emplace(name + ".w", init_matrix(rng, out_dim, in_dim));
  params.emplace(name + ".b", init_bias(rng, out_dim, in_dim));
}

std::vector<double> affine_value(const Tensor& w, const Tensor& b, std::span<const double> x) {
  std::vector<double> y = b.data;
  kern::matvec(w.data.data(), x.data(), y.data(), w.shape[0], w.shape[1]);
  return y;
}

std::vector<double> head_input(const AgentNets& nets, std::span<const double> x, int action) {
  if (action < 0 || action >= nets.arch.n_actions)
    throw std::invalid_argument("gmas: invalid action index " + std::to_string(action));
  std::vector<double> xa(x.begin(), x.end());
  xa.resize(x.size() + static_cast<std::size_t>(nets.arch.n_actions), 0.0);
  xa[x.size() + static_cast<std::size_t>(action)] = 1.0;
  return xa;
}

// three affine layers, tanh on the two hidden ones
std::vector<double> mlp3_value(const AgentNets& nets, const std::string& prefix, std::span<const double> in) {
  std::vector<double> h = affine_value(nets.p(prefix + ".l1.w"), nets.p(prefix + ".l1.b"), in);
  kern::tanh_inplace(h.data(), static_cast<std::int64_t>(h.size()));
  h = affine_value(nets.p(prefix + ".l2.w"), nets.p(prefix + ".l2.b"), h);
  kern::tanh_inplace(h.data(), static_cast<std::int64_t>(h.size()));
  return affine_value(nets.p(prefix + ".l3.w"), nets.p(prefix + ".l3.b"), h);
}

const char* q_prefix(QWhich which) { return which == QWhich::kLive ? "q" : "q_frozen"; }

// graph mirror of mlp3_value with constant parameters, for the small
// derivative-of-head graphs
Tensor mlp3_const_g(Graph& g, const AgentNets& nets, const std::string& prefix, const Tensor& in) {
  Tensor h = g.tanh(g.affine(g.constant(nets.p(prefix + ".l1.w")), in, g.constant(nets.p(prefix + ".l1.b"))));
  h = g.tanh(g.affine(g.constant(nets.p(prefix + ".l2.w")), h, g.constant(nets.p(prefix + ".l2.b"))));
  return g.affine(g.constant(nets.p(prefix + ".l3.w")), h, g.constant(nets.p(prefix + ".l3.b")));
}

Tensor tau_const_g(Graph& g, const AgentNets& nets, const Tensor& in) {
  Tensor h = g.tanh(g.affine(g.constant(nets.p("transition.l1.w")), in, g.constant(nets.p("transition.l1.b"))));
  return g.affine(g.constant(nets.p("transition.l2.w")), h, g.constant(nets.p("transition.l2.b")));
}

Tensor concat_action_const(Graph& g, const Tensor& x_graph, int n_actions, int action) {
  Tensor onehot = Tensor::zeros({n_actions});
  onehot.data[static_cast<std::size_t>(action)] = 1.0;
  return g.concat(x_graph, g.constant(onehot));
}

}  // namespace

AgentNets AgentNets::init(const ArchConfig& arch, std::uint64_t seed) {
  AgentNets nets;
  nets.arch = arch;
  Rng rng = Rng::derive(seed, 0x696e6974ull);
  const int xa_dim = arch.n_x + arch.n_actions;

  add_layer(nets.params, rng, "encoder.l1", arch.enc_h1, arch.obs_dim);
  add_layer(nets.params, rng, "encoder.l2", arch.enc_h2, arch.enc_h1);
  add_layer(nets.params, rng, "encoder.l3", arch.n_x, arch.enc_h2);

  add_layer(nets.params, rng, "q.l1", arch.head_h1, arch.n_x);
  add_layer(nets.params, rng, "q.l2", arch.head_h2, arch.head_h1);
  add_layer(nets.params, rng, "q.l3", arch.n_actions, arch.head_h2);

  add_layer(nets.params, rng, "reward.l1", arch.head_h1, xa_dim);
  add_layer(nets.params, rng, "reward.l2", arch.head_h2, arch.head_h1);
  add_layer(nets.params, rng, "reward.l3", 1, arch.head_h2);

  add_layer(nets.params, rng, "discount.l1", arch.head_h1, xa_dim);
  add_layer(nets.params, rng, "discount.l2", arch.head_h2, arch.head_h1);
  add_layer(nets.params, rng, "discount.l3", 1, arch.head_h2);

  add_layer(nets.params, rng, "transition.l1", arch.tau_h, xa_dim);
  add_layer(nets.params, rng, "transition.l2", arch.n_x, arch.tau_h);

  nets.sync_frozen();
  return nets;
}

AgentNets AgentNets::from_params(std::map<std::string, Tensor> params) {
  AgentNets nets;
  nets.params = std::move(params);
  const auto dim = [&](const char* name, int axis) -> int {
    const auto it = nets.params.find(name);
    if (it == nets.params.end()) throw std::runtime_error(std::string("gmas: checkpoint is missing parameter ") + name);
    return it->second.shape.at(static_cast<std::size_t>(axis));
  };
  nets.arch.obs_dim = dim("encoder.l1.w", 1);
  nets.arch.enc_h1 = dim("encoder.l1.w", 0);
  nets.arch.enc_h2 = dim("encoder.l2.w", 0);
  nets.arch.n_x = dim("encoder.l3.w", 0);
  nets.arch.head_h1 = dim("q.l1.w", 0);
  nets.arch.head_h2 = dim("q.l2.w", 0);
  nets.arch.n_actions = dim("q.l3.w", 0);
  nets.arch.tau_h = dim("transition.l1.w", 0);
  if (nets.params.find("q_frozen.l1.w") == nets.params.end()) nets.sync_frozen();
  return nets;
}

void AgentNets::sync_frozen() {
  for (const char* layer : {"l1", "l2", "l3"}) {
    for (const char* kind : {".w", ".b"}) {
      const std::string src = std::string("q.") + layer + kind;
      const std::string dst = std::string("q_frozen.") + layer + kind;
      params[dst] = params.at(src);
      params[dst].node = -1;
    }
  }
}

std::vector<std::string> AgentNets::live_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : params)
    if (!name.starts_with("q_frozen.")) names.push_back(name);
  return names;
}

const Tensor& AgentNets::p(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) throw std::runtime_error("gmas: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<double> encode(const AgentNets& nets, std::span<const float> obs) {
  if (static_cast<int>(obs.size()) != nets.arch.obs_dim)
    throw std::invalid_argument("gmas: encode expects " + std::to_string(nets.arch.obs_dim) + " pixels, got " +
                                std::to_string(obs.size()));
  std::vector<double> in(obs.begin(), obs.end());
  std::vector<double> x = mlp3_value(nets, "encoder", in);
  kern::tanh_inplace(x.data(), static_cast<std::int64_t>(x.size()));
  return x;
}

std::vector<double> q_values(const AgentNets& nets, QWhich which, std::span<const double> x) {
  return mlp3_value(nets, q_prefix(which), x);
}

double predict_reward(const AgentNets& nets, std::span<const double> x, int action) {
  return mlp3_value(nets, "reward", head_input(nets, x, action))[0];
}

double predict_discount(const AgentNets& nets, std::span<const double> x, int action) {
  return 0.5 * std::tanh(mlp3_value(nets, "discount", head_input(nets, x, action))[0]) + 0.5;
}

std::vector<double> predict_next(const AgentNets& nets, std::span<const double> x, int action) {
  const std::vector<double> xa = head_input(nets, x, action);
  std::vector<double> h = affine_value(nets.p("transition.l1.w"), nets.p("transition.l1.b"), xa);
  kern::tanh_inplace(h.data(), static_cast<std::int64_t>(h.size()));
  std::vector<double> delta = affine_value(nets.p("transition.l2.w"), nets.p("transition.l2.b"), h);
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += x[i];
  return delta;
}

std::vector<double> q_grad_x(const AgentNets& nets, QWhich which, std::span<const double> x, int action) {
  if (action < 0 || action >= nets.arch.n_actions)
    throw std::invalid_argument("gmas: invalid action index " + std::to_string(action));
  Graph g;
  const Tensor xl = g.leaf(Tensor::vec({x.begin(), x.end()}));
  const Tensor q = mlp3_const_g(g, nets, q_prefix(which), xl);
  Tensor pick = Tensor::zeros({nets.arch.n_actions});
  pick.data[static_cast<std::size_t>(action)] = 1.0;
  return g.gradient(g.dot(q, g.constant(pick)), xl).data;
}

std::vector<double> reward_grad_x(const AgentNets& nets, std::span<const double> x, int action) {
  Graph g;
  const Tensor xl = g.leaf(Tensor::vec({x.begin(), x.end()}));
  const Tensor out = mlp3_const_g(g, nets, "reward", concat_action_const(g, xl, nets.arch.n_actions, action));
  return g.gradient(g.sum(out), xl).data;
}

std::vector<double> discount_grad_x(const AgentNets& nets, std::span<const double> x, int action) {
  Graph g;
  const Tensor xl = g.leaf(Tensor::vec({x.begin(), x.end()}));
  const Tensor u = mlp3_const_g(g, nets, "discount", concat_action_const(g, xl, nets.arch.n_actions, action));
  const Tensor squashed = g.scale(g.tanh(u), 0.5);  // the +0.5 shift has no gradient
  return g.gradient(g.sum(squashed), xl).data;
}

Tensor tau_jacobian_x(const AgentNets& nets, std::span<const double> x, int action) {
  Graph g;
  const Tensor xl = g.leaf(Tensor::vec({x.begin(), x.end()}));
  const Tensor tau = tau_const_g(g, nets, concat_action_const(g, xl, nets.arch.n_actions, action));
  return g.jacobian(tau, xl);
}

const Tensor& BoundParams::operator()(const std::string& name) const {
  const auto it = handles.find(name);
  if (it == handles.end()) throw std::runtime_error("gmas: parameter '" + name + "' is not bound to this graph");
  return it->second;
}

BoundParams bind_live(Graph& g, const AgentNets& nets) {
  BoundParams bound;
  for (const std::string& name : nets.live_names()) bound.handles.emplace(name, g.leaf(nets.p(name)));
  return bound;
}

Tensor encode_g(Graph& g, const BoundParams& p, const Tensor& obs) {
  Tensor h = g.tanh(g.affine(p("encoder.l1.w"), obs, p("encoder.l1.b")));
  h = g.tanh(g.affine(p("encoder.l2.w"), h, p("encoder.l2.b")));
  return g.tanh(g.affine(p("encoder.l3.w"), h, p("encoder.l3.b")));
}

namespace {
Tensor mlp3_g(Graph& g, const BoundParams& p, const std::string& prefix, const Tensor& in) {
  Tensor h = g.tanh(g.affine(p(prefix + ".l1.w"), in, p(prefix + ".l1.b")));
  h = g.tanh(g.affine(p(prefix + ".l2.w"), h, p(prefix + ".l2.b")));
  return g.affine(p(prefix + ".l3.w"), h, p(prefix + ".l3.b"));
}
}  // namespace

Tensor q_values_g(Graph& g, const BoundParams& p, const Tensor& x) { return mlp3_g(g, p, "q", x); }

Tensor reward_g(Graph& g, const BoundParams& p, const Tensor& xa) { return mlp3_g(g, p, "reward", xa); }

Tensor discount_g(Graph& g, const BoundParams& p, const Tensor& xa) {
  const Tensor u = mlp3_g(g, p, "discount", xa);
  return g.add(g.scale(g.tanh(u), 0.5), g.constant(Tensor::full(u.shape, 0.5)));
}

Tensor tau_g(Graph& g, const BoundParams& p, const Tensor& xa) {
  const Tensor h = g.tanh(g.affine(p("transition.l1.w"), xa, p("transition.l1.b")));
  return g.affine(p("transition.l2.w"), h, p("transition.l2.b"));
}

BatchData make_batch(const ReplayBuffer& buffer, std::span<const std::int64_t> idx) {
  const int b = static_cast<int>(idx.size());
  const int d = buffer.obs_dim();
  const int a = maze::kNumActions;
  BatchData batch;
  batch.obs = Tensor::zeros({d, b});
  batch.next_obs = Tensor::zeros({d, b});
  batch.onehot = Tensor::zeros({a, b});
  batch.rewards = Tensor::zeros({1, b});
  batch.discounts = Tensor::zeros({1, b});
  batch.indices.assign(idx.begin(), idx.end());
  for (int i = 0; i < b; ++i) {
    const auto s = buffer.obs(idx[static_cast<std::size_t>(i)]);
    const auto s2 = buffer.next_obs(idx[static_cast<std::size_t>(i)]);
    for (int k = 0; k < d; ++k) {
      batch.obs.data[static_cast<std::size_t>(k) * b + i] = s[static_cast<std::size_t>(k)];
      batch.next_obs.data[static_cast<std::size_t>(k) * b + i] = s2[static_cast<std::size_t>(k)];
    }
    const int act = buffer.action(idx[static_cast<std::size_t>(i)]);
    batch.actions.push_back(act);
    batch.onehot.data[static_cast<std::size_t>(act) * b + i] = 1.0;
    batch.rewards.data[static_cast<std::size_t>(i)] = buffer.reward(idx[static_cast<std::size_t>(i)]);
    batch.discounts.data[static_cast<std::size_t>(i)] = buffer.discount(idx[static_cast<std::size_t>(i)]);
  }
  return batch;
}

Tensor col_of(Graph& g, const Tensor& matrix, int j) {
  Tensor pick = Tensor::zeros({matrix.shape.at(1)});
  pick.data[static_cast<std::size_t>(j)] = 1.0;
  return g.matmul(matrix, g.constant(pick));
}

Tensor mean_of(Graph& g, std::span<const Tensor> scalars) {
  if (scalars.empty()) throw std::invalid_argument("gmas: mean_of needs at least one term");
  Tensor acc = scalars[0];
  for (std::size_t i = 1; i < scalars.size(); ++i) acc = g.add(acc, scalars[i]);
  return g.scale(acc, 1.0 / static_cast<double>(scalars.size()));
}

CrarLossNodes loss_crar(Graph& g, const BoundParams& p, const BatchData& batch, const Tensor& x,
                        const Tensor& x_next) {
  const Tensor xa = g.concat(x, g.constant(batch.onehot));
  CrarLossNodes losses;
  losses.reward = g.mean(g.abs(g.sub(reward_g(g, p, xa), g.constant(batch.rewards))));
  losses.discount = g.mean(g.abs(g.sub(discount_g(g, p, xa), g.constant(batch.discounts))));
  losses.transition = g.mean(g.abs(g.sub(g.add(x, tau_g(g, p, xa)), x_next)));
  return losses;
}

Tensor loss_entropy(Graph& g, const Tensor& x1, const Tensor& x2, double c_d) {
  if (c_d <= 0.0) throw std::invalid_argument("gmas: entropy loss needs c_d > 0");
  if (x1.rank() == 1) return g.exp(g.scale(g.l2norm(g.sub(x1, x2)), -c_d));
  const int b = x1.shape.at(1);
  std::vector<Tensor> terms;
  terms.reserve(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i)
    terms.push_back(g.exp(g.scale(g.l2norm(g.sub(col_of(g, x1, i), col_of(g, x2, i))), -c_d)));
  return mean_of(g, terms);
}

Tensor loss_linf(Graph& g, const Tensor& x) {
  const auto one_col = [&](const Tensor& v) {
    return g.max_with_scalar(g.sub(g.linf_norm(v), g.constant(1.0)), 0.0);
  };
  if (x.rank() == 1) return one_col(x);
  const int b = x.shape.at(1);
  std::vector<Tensor> terms;
  terms.reserve(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) terms.push_back(one_col(col_of(g, x, i)));
  return mean_of(g, terms);
}

std::vector<double> ddqn_target(const AgentNets& nets, const BatchData& batch,
                                std::span<const double> x_next_values) {
  const int b = static_cast<int>(batch.actions.size());
  const int nx = nets.arch.n_x;
  if (static_cast<int>(x_next_values.size()) != nx * b)
    throw std::invalid_argument("gmas: ddqn_target expects a [n_x, B] next-state value buffer");
  std::vector<double> targets(static_cast<std::size_t>(b));
  std::vector<double> x(nx);
  for (int i = 0; i < b; ++i) {
    for (int k = 0; k < nx; ++k) x[static_cast<std::size_t>(k)] = x_next_values[static_cast<std::size_t>(k) * b + i];
    const std::vector<double> q_live = q_values(nets, QWhich::kLive, x);
    int best = 0;
    for (int a = 1; a < nets.arch.n_actions; ++a)
      if (q_live[static_cast<std::size_t>(a)] > q_live[static_cast<std::size_t>(best)]) best = a;
    const std::vector<double> q_frozen = q_values(nets, QWhich::kFrozen, x);
    targets[static_cast<std::size_t>(i)] =
        batch.rewards.data[static_cast<std::size_t>(i)] +
        batch.discounts.data[static_cast<std::size_t>(i)] * q_frozen[static_cast<std::size_t>(best)];
  }
  return targets;
}

Tensor q_selected_g(Graph& g, const BoundParams&, const Tensor& q_all, const BatchData& batch) {
  const int b = static_cast<int>(batch.actions.size());
  const int a = q_all.shape.at(0);
  Tensor mask = Tensor::zeros({a, b});
  for (int i = 0; i < b; ++i)
    mask.data[static_cast<std::size_t>(batch.actions[static_cast<std::size_t>(i)]) * b + i] = 1.0;
  const Tensor masked = g.mul(q_all, g.constant(mask));
  return g.matmul(g.constant(Tensor::full({1, a}, 1.0)), masked);
}

}  // namespace gmas
