// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>

#include "gmas/gradmatch.hpp"
#include "gmas/graph.hpp"
#include "gmas/planner.hpp"
#include "gmas/rng.hpp"

namespace gmas {

double rel_err(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-4}); }

namespace {
std::string fmt_err(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}
}  // namespace

double enumerate_q_depth(const AgentNets& nets, QWhich which, std::span<const double> x, int action, int depth) {
  if (depth < 1) throw std::invalid_argument("gmas: enumerate_q_depth needs depth >= 1");
  const int n_actions = nets.arch.n_actions;
  std::vector<int> seq(static_cast<std::size_t>(depth), 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    // nested value for this sequence: root action first, then seq[0..d-2]
    // imagined actions, seq[d-1] indexing the terminal Q
    std::vector<double> state(x.begin(), x.end());
    std::vector<double> rewards{predict_reward(nets, state, action)};
    std::vector<double> discounts{predict_discount(nets, state, action)};
    state = predict_next(nets, state, action);
    for (int level = 0; level + 1 < depth; ++level) {
      const int a = seq[static_cast<std::size_t>(level)];
      rewards.push_back(predict_reward(nets, state, a));
      discounts.push_back(predict_discount(nets, state, a));
      state = predict_next(nets, state, a);
    }
    double value = q_values(nets, which, state)[static_cast<std::size_t>(seq[static_cast<std::size_t>(depth - 1)])];
    for (int level = depth - 1; level >= 0; --level)
      value = rewards[static_cast<std::size_t>(level)] + discounts[static_cast<std::size_t>(level)] * value;
    best = std::max(best, value);

    int pos = depth - 1;
    while (pos >= 0 && ++seq[static_cast<std::size_t>(pos)] == n_actions) seq[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return best;
}

double q_fixed_path(const AgentNets& nets, std::span<const double> x, int action, std::span<const int> path) {
  if (path.empty()) return q_values(nets, QWhich::kFrozen, x)[static_cast<std::size_t>(action)];
  const double r = predict_reward(nets, x, action);
  const double g = predict_discount(nets, x, action);
  const std::vector<double> next = predict_next(nets, x, action);
  return r + g * q_fixed_path(nets, next, path[0], path.subspan(1));
}

int bfs_distance(const maze::MazeState& state, maze::GridPos from, maze::GridPos to) {
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  std::vector<int> dist(static_cast<std::size_t>(state.width) * state.height, -1);
  const auto at = [&](int r, int c) -> int& { return dist[static_cast<std::size_t>(r) * state.width + c]; };
  std::deque<maze::GridPos> frontier{from};
  at(from.row, from.col) = 0;
  while (!frontier.empty()) {
    const maze::GridPos cur = frontier.front();
    frontier.pop_front();
    if (cur == to) return at(cur.row, cur.col);
    for (int a = 0; a < 4; ++a) {
      const int nr = cur.row + dr[a], nc = cur.col + dc[a];
      if (nr < 0 || nr >= state.height || nc < 0 || nc >= state.width) continue;
      if (state.wall(nr, nc) || at(nr, nc) >= 0) continue;
      at(nr, nc) = at(cur.row, cur.col) + 1;
      frontier.push_back({nr, nc});
    }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// op-level finite differences
// ---------------------------------------------------------------------------

namespace {

struct OpCase {
  std::string name;
  // sample plain input tensors (kink-safe where the op has kinks)
  std::function<std::vector<Tensor>(Rng&)> sample;
  // build a scalar from graph leaves; the last input doubles as the random
  // linear functional that scalarizes non-scalar op outputs
  std::function<Tensor(Graph&, std::span<const Tensor>)> build;
};

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// scalarize out via sum(out * w): w must have out's shape
Tensor against(Graph& g, const Tensor& out, const Tensor& w) { return g.sum(g.mul(out, w)); }

std::vector<OpCase> op_cases() {
  std::vector<OpCase> cases;
  const auto elementwise2 = [](const char* name, auto opfn) {
    return OpCase{
        name,
        [](Rng& rng) {
          return std::vector<Tensor>{random_tensor(rng, {4}), random_tensor(rng, {4}), random_tensor(rng, {4})};
        },
        [opfn](Graph& g, std::span<const Tensor> in) { return against(g, opfn(g, in[0], in[1]), in[2]); }};
  };
  cases.push_back(elementwise2("add", [](Graph& g, const Tensor& a, const Tensor& b) { return g.add(a, b); }));
  cases.push_back(elementwise2("sub", [](Graph& g, const Tensor& a, const Tensor& b) { return g.sub(a, b); }));
  cases.push_back(elementwise2("mul", [](Graph& g, const Tensor& a, const Tensor& b) { return g.mul(a, b); }));
  cases.push_back(OpCase{"div",
                         [](Rng& rng) {
                           Tensor b = random_tensor(rng, {4});
                           for (auto& v : b.data) v = (v < 0 ? -1.0 : 1.0) * (0.3 + std::fabs(v));
                           return std::vector<Tensor>{random_tensor(rng, {4}), b, random_tensor(rng, {4})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.div(in[0], in[1]), in[2]); }});
  cases.push_back(OpCase{"matmul(vec)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3}),
                                                      random_tensor(rng, {2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.matmul(in[0], in[1]), in[2]); }});
  cases.push_back(OpCase{"matmul(mat)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3, 2}),
                                                      random_tensor(rng, {2, 2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.matmul(in[0], in[1]), in[2]); }});
  cases.push_back(OpCase{"affine(vec)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3}),
                                                      random_tensor(rng, {2}), random_tensor(rng, {2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) {
                           return against(g, g.affine(in[0], in[1], in[2]), in[3]);
                         }});
  cases.push_back(OpCase{"affine(mat)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3, 2}),
                                                      random_tensor(rng, {2}), random_tensor(rng, {2, 2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) {
                           return against(g, g.affine(in[0], in[1], in[2]), in[3]);
                         }});
  const auto elementwise1 = [](const char* name, auto opfn) {
    return OpCase{name,
                  [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {4}), random_tensor(rng, {4})}; },
                  [opfn](Graph& g, std::span<const Tensor> in) { return against(g, opfn(g, in[0]), in[1]); }};
  };
  cases.push_back(elementwise1("tanh", [](Graph& g, const Tensor& a) { return g.tanh(a); }));
  cases.push_back(elementwise1("square", [](Graph& g, const Tensor& a) { return g.square(a); }));
  cases.push_back(OpCase{"exp",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {4}, -1.5, 1.5), random_tensor(rng, {4})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.exp(in[0]), in[1]); }});
  cases.push_back(OpCase{"abs",
                         [](Rng& rng) {
                           Tensor a = random_tensor(rng, {4});
                           for (auto& v : a.data) v = (v < 0 ? -1.0 : 1.0) * (0.05 + std::fabs(v));
                           return std::vector<Tensor>{a, random_tensor(rng, {4})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.abs(in[0]), in[1]); }});
  cases.push_back(OpCase{"sum", [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {5})}; },
                         [](Graph& g, std::span<const Tensor> in) { return g.sum(in[0]); }});
  cases.push_back(OpCase{"mean", [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {5})}; },
                         [](Graph& g, std::span<const Tensor> in) { return g.mean(in[0]); }});
  cases.push_back(OpCase{"l2norm",
                         [](Rng& rng) {
                           Tensor a = random_tensor(rng, {4});
                           double n = 0;
                           for (double v : a.data) n += v * v;
                           if (std::sqrt(n) < 0.3) a.data[0] += 1.0;
                           return std::vector<Tensor>{a};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return g.l2norm(in[0]); }});
  cases.push_back(OpCase{"linf_norm",
                         [](Rng& rng) {
                           Tensor a = random_tensor(rng, {4});
                           // unique argmax with a clear margin keeps FD off the kink
                           std::size_t k = 0;
                           for (std::size_t i = 1; i < a.data.size(); ++i)
                             if (std::fabs(a.data[i]) > std::fabs(a.data[k])) k = i;
                           a.data[k] += a.data[k] >= 0 ? 0.5 : -0.5;
                           return std::vector<Tensor>{a};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return g.linf_norm(in[0]); }});
  cases.push_back(OpCase{"max_with_scalar",
                         [](Rng& rng) {
                           Tensor a = random_tensor(rng, {4});
                           for (auto& v : a.data)
                             if (std::fabs(v - 0.2) < 0.05) v += 0.2;
                           return std::vector<Tensor>{a, random_tensor(rng, {4})};
                         },
                         [](Graph& g, std::span<const Tensor> in) {
                           return against(g, g.max_with_scalar(in[0], 0.2), in[1]);
                         }});
  cases.push_back(OpCase{"dot",
                         [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {4}), random_tensor(rng, {4})}; },
                         [](Graph& g, std::span<const Tensor> in) { return g.dot(in[0], in[1]); }});
  cases.push_back(OpCase{"concat(vec)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2}), random_tensor(rng, {3}),
                                                      random_tensor(rng, {5})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.concat(in[0], in[1]), in[2]); }});
  cases.push_back(OpCase{"concat(mat)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {1, 3}),
                                                      random_tensor(rng, {3, 3})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.concat(in[0], in[1]), in[2]); }});
  cases.push_back(OpCase{"scale",
                         [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {4}), random_tensor(rng, {4})}; },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.scale(in[0], -1.7), in[1]); }});
  cases.push_back(OpCase{"broadcast",
                         [](Rng& rng) {
                           return std::vector<Tensor>{Tensor::scalar(rng.uniform(-2, 2)), random_tensor(rng, {2, 3})};
                         },
                         [](Graph& g, std::span<const Tensor> in) {
                           return against(g, g.broadcast(in[0], {2, 3}), in[1]);
                         }});
  cases.push_back(OpCase{"slice(vec)",
                         [](Rng& rng) { return std::vector<Tensor>{random_tensor(rng, {5}), random_tensor(rng, {3})}; },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.slice(in[0], 1, 3), in[1]); }});
  cases.push_back(OpCase{"slice(mat)",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {4, 2}), random_tensor(rng, {2, 2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.slice(in[0], 1, 2), in[1]); }});
  cases.push_back(OpCase{"transpose",
                         [](Rng& rng) {
                           return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3, 2})};
                         },
                         [](Graph& g, std::span<const Tensor> in) { return against(g, g.transpose(in[0]), in[1]); }});
  return cases;
}

double eval_case(const OpCase& c, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(g.leaf(t));
  return c.build(g, leaves).item();
}

}  // namespace

CheckResult check_op_gradients(std::uint64_t seed, int trials_per_op) {
  const std::vector<OpCase> cases = op_cases();
  double worst = 0.0;
  std::string worst_op;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const OpCase& c = cases[ci];
    for (int trial = 0; trial < trials_per_op; ++trial) {
      Rng rng = Rng::derive(seed, ci * 1000003ull + static_cast<std::uint64_t>(trial));
      std::vector<Tensor> inputs = c.sample(rng);

      Graph g;
      std::vector<Tensor> leaves;
      for (const Tensor& t : inputs) leaves.push_back(g.leaf(t));
      const Tensor out = c.build(g, leaves);
      const std::vector<Tensor> grads = g.gradient(out, leaves);

      for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t k = 0; k < inputs[t].data.size(); ++k) {
          const double keep = inputs[t].data[k];
          inputs[t].data[k] = keep + kFdStep;
          const double hi = eval_case(c, inputs);
          inputs[t].data[k] = keep - kFdStep;
          const double lo = eval_case(c, inputs);
          inputs[t].data[k] = keep;
          const double fd = (hi - lo) / (2.0 * kFdStep);
          const double err = rel_err(grads[t].data[k], fd);
          if (err > worst) {
            worst = err;
            worst_op = c.name;
          }
        }
      }
    }
  }
  CheckResult r;
  r.name = "op gradients vs central finite differences";
  r.pass = worst < 1e-4;
  r.detail = "worst rel err " + fmt_err(worst) + (worst_op.empty() ? "" : " (" + worst_op + ")") + " over " +
             std::to_string(trials_per_op) + " trials/op";
  return r;
}

namespace {

// scalarized forward value of one of the five network compositions, given a
// full parameter override; rebuilds everything so it can serve as the FD
// functional
struct CompositionProbe {
  std::string name;
  std::vector<std::string> param_names;
  // returns the scalar value under the given params and probe input
  std::function<double(const AgentNets&, const std::vector<double>&)> value;
};

}  // namespace

CheckResult check_composition_gradients(std::uint64_t seed, int instances) {
  double worst = 0.0;
  std::string worst_what;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng = Rng::derive(seed, 0xc0417ull + static_cast<std::uint64_t>(inst));
    ArchConfig arch;  // full-size encoder, default heads
    const AgentNets nets = AgentNets::init(arch, rng.next_u64());
    const int action = rng.uniform_int(arch.n_actions);

    std::vector<float> obs(static_cast<std::size_t>(arch.obs_dim));
    for (auto& v : obs) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<double> x(static_cast<std::size_t>(arch.n_x));
    for (auto& v : x) v = rng.uniform(-0.9, 0.9);
    std::vector<double> probe_enc(static_cast<std::size_t>(arch.n_x));
    for (auto& v : probe_enc) v = rng.uniform(-1.0, 1.0);
    std::vector<double> probe_q(static_cast<std::size_t>(arch.n_actions));
    for (auto& v : probe_q) v = rng.uniform(-1.0, 1.0);
    std::vector<double> probe_tau(static_cast<std::size_t>(arch.n_x));
    for (auto& v : probe_tau) v = rng.uniform(-1.0, 1.0);

    // scalarized composition values as plain functions of the parameter set
    const auto dot_with = [](const std::vector<double>& a, const std::vector<double>& w) {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * w[i];
      return s;
    };
    struct Comp {
      std::string name;
      std::vector<std::string> prefixes;
      std::function<double(const AgentNets&)> value;
    };
    const std::vector<Comp> comps = {
        {"encoder", {"encoder."}, [&](const AgentNets& n) { return dot_with(encode(n, obs), probe_enc); }},
        {"q", {"encoder.", "q."}, [&](const AgentNets& n) { return dot_with(q_values(n, QWhich::kLive, encode(n, obs)), probe_q); }},
        {"reward", {"reward."}, [&](const AgentNets& n) { return predict_reward(n, x, action); }},
        {"discount", {"discount."}, [&](const AgentNets& n) { return predict_discount(n, x, action); }},
        {"transition", {"transition."}, [&](const AgentNets& n) { return dot_with(predict_next(n, x, action), probe_tau); }},
    };

    for (const Comp& comp : comps) {
      // analytic gradient via one graph over the same composition
      Graph g;
      BoundParams bound;
      for (const std::string& name : nets.live_names()) bound.handles.emplace(name, g.leaf(nets.p(name)));
      Tensor scalar;
      if (comp.name == "encoder" || comp.name == "q") {
        Tensor obs_t = Tensor::zeros({arch.obs_dim});
        for (int i = 0; i < arch.obs_dim; ++i) obs_t.data[static_cast<std::size_t>(i)] = obs[static_cast<std::size_t>(i)];
        const Tensor xe = encode_g(g, bound, g.constant(obs_t));
        if (comp.name == "encoder") {
          scalar = g.dot(xe, g.constant(Tensor::vec({probe_enc.begin(), probe_enc.end()})));
        } else {
          scalar = g.dot(q_values_g(g, bound, xe), g.constant(Tensor::vec({probe_q.begin(), probe_q.end()})));
        }
      } else {
        Tensor onehot = Tensor::zeros({arch.n_actions});
        onehot.data[static_cast<std::size_t>(action)] = 1.0;
        const Tensor xa = g.concat(g.constant(Tensor::vec({x.begin(), x.end()})), g.constant(onehot));
        if (comp.name == "reward") {
          scalar = reward_g(g, bound, xa);
          scalar = g.sum(scalar);
        } else if (comp.name == "discount") {
          scalar = g.sum(discount_g(g, bound, xa));
        } else {
          const Tensor nxt = g.add(g.constant(Tensor::vec({x.begin(), x.end()})), tau_g(g, bound, xa));
          scalar = g.dot(nxt, g.constant(Tensor::vec({probe_tau.begin(), probe_tau.end()})));
        }
      }

      // two sampled coordinates per parameter tensor of this composition
      for (const std::string& pname : nets.live_names()) {
        bool relevant = false;
        for (const std::string& prefix : comp.prefixes)
          if (pname.starts_with(prefix)) relevant = true;
        if (!relevant) continue;
        const Tensor analytic = g.gradient(scalar, bound(pname));
        for (int pick = 0; pick < 2; ++pick) {
          AgentNets perturbed = nets;
          const std::size_t k = static_cast<std::size_t>(rng.uniform_i64(static_cast<std::int64_t>(analytic.data.size())));
          perturbed.params.at(pname).data[k] += kFdStep;
          const double hi = comp.value(perturbed);
          perturbed.params.at(pname).data[k] -= 2.0 * kFdStep;
          const double lo = comp.value(perturbed);
          const double fd = (hi - lo) / (2.0 * kFdStep);
          const double err = rel_err(analytic.data[k], fd);
          if (err > worst) {
            worst = err;
            worst_what = comp.name + "/" + pname;
          }
        }
      }
    }
  }
  CheckResult r;
  r.name = "network composition gradients vs finite differences";
  r.pass = worst < 1e-4;
  r.detail = "worst rel err " + fmt_err(worst) + (worst_what.empty() ? "" : " (" + worst_what + ")") + " over " +
             std::to_string(instances) + " instances";
  return r;
}

namespace {

// small random tanh MLP for the second-order checks
struct TinyMlp {
  std::vector<Tensor> params;  // w1 b1 w2 b2 w3 b3
  int in = 3, h1 = 8, h2 = 6, out = 4;

  static TinyMlp make(Rng& rng) {
    TinyMlp m;
    const auto mk = [&](int r, int c) {
      Tensor t = Tensor::zeros({r, c});
      for (auto& v : t.data) v = rng.uniform(-0.7, 0.7);
      return t;
    };
    const auto mkb = [&](int r) {
      Tensor t = Tensor::zeros({r});
      for (auto& v : t.data) v = rng.uniform(-0.7, 0.7);
      return t;
    };
    m.params = {mk(m.h1, m.in), mkb(m.h1), mk(m.h2, m.h1), mkb(m.h2), mk(m.out, m.h2), mkb(m.out)};
    return m;
  }

  // L(theta) = dist(dQ/dx at fixed x and action, c)
  double matching_loss(const std::vector<double>& x, int action, const std::vector<double>& c,
                       DistanceKind kind) const {
    Graph g;
    std::vector<Tensor> leaves;
    for (const Tensor& p : params) leaves.push_back(g.leaf(p));
    return build_loss(g, leaves, x, action, c, kind).item();
  }

  Tensor build_loss(Graph& g, const std::vector<Tensor>& leaves, const std::vector<double>& x, int action,
                    const std::vector<double>& c, DistanceKind kind) const {
    const Tensor xt = g.constant(Tensor::vec({x.begin(), x.end()}));
    Tensor h = g.tanh(g.affine(leaves[0], xt, leaves[1]));
    h = g.tanh(g.affine(leaves[2], h, leaves[3]));
    const Tensor q = g.affine(leaves[4], h, leaves[5]);
    Tensor pick = Tensor::zeros({out});
    pick.data[static_cast<std::size_t>(action)] = 1.0;
    const Tensor q_sel = g.dot(q, g.constant(pick));
    const Tensor live = g.gradient_as_graph(q_sel, xt);
    return distance_g(g, live, g.constant(Tensor::vec({c.begin(), c.end()})), kind);
  }
};

}  // namespace

CheckResult check_second_order(std::uint64_t seed, int instances) {
  double worst = 0.0;
  std::string worst_kind;
  for (int inst = 0; inst < instances; ++inst) {
    for (const DistanceKind kind : {DistanceKind::kCosine, DistanceKind::kL2}) {
      Rng rng = Rng::derive(seed, 0x2e6f4ull + static_cast<std::uint64_t>(inst) * 2 +
                                      (kind == DistanceKind::kCosine ? 0 : 1));
      TinyMlp mlp = TinyMlp::make(rng);
      std::vector<double> x(static_cast<std::size_t>(mlp.in));
      for (auto& v : x) v = rng.uniform(-0.9, 0.9);
      std::vector<double> c(static_cast<std::size_t>(mlp.in));
      for (auto& v : c) v = rng.uniform(-1.0, 1.0);
      const int action = rng.uniform_int(mlp.out);

      Graph g;
      std::vector<Tensor> leaves;
      for (const Tensor& p : mlp.params) leaves.push_back(g.leaf(p));
      const Tensor loss = mlp.build_loss(g, leaves, x, action, c, kind);
      const std::vector<Tensor> grads = g.gradient(loss, leaves);

      for (std::size_t t = 0; t < mlp.params.size(); ++t) {
        for (std::size_t k = 0; k < mlp.params[t].data.size(); ++k) {
          const double keep = mlp.params[t].data[k];
          mlp.params[t].data[k] = keep + kFdStep;
          const double hi = mlp.matching_loss(x, action, c, kind);
          mlp.params[t].data[k] = keep - kFdStep;
          const double lo = mlp.matching_loss(x, action, c, kind);
          mlp.params[t].data[k] = keep;
          const double fd = (hi - lo) / (2.0 * kFdStep);
          const double err = rel_err(grads[t].data[k], fd);
          if (err > worst) {
            worst = err;
            worst_kind = kind == DistanceKind::kCosine ? "cosine" : "l2";
          }
        }
      }
    }
  }
  CheckResult r;
  r.name = "second-order matching-loss gradients vs finite differences";
  r.pass = worst < 1e-3;
  r.detail = "worst rel err " + fmt_err(worst) + (worst_kind.empty() ? "" : " (" + worst_kind + ")") + " over " +
             std::to_string(instances) + " instances x 2 distances";
  return r;
}

CheckResult check_planner_enumeration(std::uint64_t seed, int models) {
  double worst = 0.0;
  for (int m = 0; m < models; ++m) {
    Rng rng = Rng::derive(seed, 0x9fa7ull + static_cast<std::uint64_t>(m));
    const AgentNets nets = AgentNets::init(ArchConfig{}, rng.next_u64());
    std::vector<double> x(static_cast<std::size_t>(nets.arch.n_x));
    for (auto& v : x) v = rng.uniform(-0.9, 0.9);
    for (int depth = 1; depth <= 3; ++depth) {
      for (int a = 0; a < nets.arch.n_actions; ++a) {
        const double planner = q_at_depth(x, a, depth, nets, QWhich::kLive, nets.arch.n_actions);
        const double oracle = enumerate_q_depth(nets, QWhich::kLive, x, a, depth);
        worst = std::max(worst, std::fabs(planner - oracle));
      }
    }
  }
  CheckResult r;
  r.name = "planner backup vs exhaustive action-sequence enumeration";
  r.pass = worst < 1e-10;
  r.detail = "worst abs diff " + fmt_err(worst) + " over " + std::to_string(models) + " models, depths 1-3";
  return r;
}

CheckResult check_grad_recursion(std::uint64_t seed, int models) {
  double worst = 0.0;
  for (int m = 0; m < models; ++m) {
    Rng rng = Rng::derive(seed, 0x61bfull + static_cast<std::uint64_t>(m));
    const AgentNets nets = AgentNets::init(ArchConfig{}, rng.next_u64());
    std::vector<double> x(static_cast<std::size_t>(nets.arch.n_x));
    for (auto& v : x) v = rng.uniform(-0.9, 0.9);
    const int action = rng.uniform_int(nets.arch.n_actions);
    for (int depth = 0; depth <= 3; ++depth) {
      std::vector<int> path;
      if (depth >= 1) path = best_actions(x, action, depth, nets, QWhich::kFrozen, nets.arch.n_actions);
      const std::vector<double> analytic =
          grad_at_depth(x, action, depth, nets, path, PlanConfig::JacobianMode::kResidual, nets.arch.n_actions);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        std::vector<double> xp(x);
        xp[k] = keep + kFdStep;
        const double hi = q_fixed_path(nets, xp, action, path);
        xp[k] = keep - kFdStep;
        const double lo = q_fixed_path(nets, xp, action, path);
        const double fd = (hi - lo) / (2.0 * kFdStep);
        worst = std::max(worst, rel_err(analytic[k], fd));
      }
    }
  }
  CheckResult r;
  r.name = "slope recursion (residual mode) vs finite differences of the fixed-path planner value";
  r.pass = worst < 1e-3;
  r.detail = "worst rel err " + fmt_err(worst) + " over " + std::to_string(models) + " models, depths 0-3";
  return r;
}

CheckResult check_paper_jacobian_mode(std::uint64_t seed, int models) {
  double worst = 0.0;
  for (int m = 0; m < models; ++m) {
    Rng rng = Rng::derive(seed, 0x4a61ull + static_cast<std::uint64_t>(m));
    AgentNets nets = AgentNets::init(ArchConfig{}, rng.next_u64());
    // zero transition: next state is exactly x, residual Jacobian collapses
    // to the identity while the literal mode sees a zero Jacobian
    for (auto& [name, t] : nets.params)
      if (name.starts_with("transition.")) std::fill(t.data.begin(), t.data.end(), 0.0);
    std::vector<double> x(static_cast<std::size_t>(nets.arch.n_x));
    for (auto& v : x) v = rng.uniform(-0.9, 0.9);
    const int action = rng.uniform_int(nets.arch.n_actions);
    for (int depth = 1; depth <= 3; ++depth) {
      const std::vector<int> path = best_actions(x, action, depth, nets, QWhich::kFrozen, nets.arch.n_actions);
      const auto residual =
          grad_at_depth(x, action, depth, nets, path, PlanConfig::JacobianMode::kResidual, nets.arch.n_actions);
      const auto paper =
          grad_at_depth(x, action, depth, nets, path, PlanConfig::JacobianMode::kPaperLiteral, nets.arch.n_actions);
      // expected gap: g(x, a) * grad_at_depth(x_plus, a'', depth - 1)
      const double g_val = predict_discount(nets, x, action);
      const std::vector<double> x_plus = predict_next(nets, x, action);
      const std::vector<int> tail(path.begin() + 1, path.end());
      const auto inner =
          grad_at_depth(x_plus, path[0], depth - 1, nets, tail, PlanConfig::JacobianMode::kResidual,
                        nets.arch.n_actions);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double gap = residual[k] - paper[k];
        worst = std::max(worst, std::fabs(gap - g_val * inner[k]));
      }
    }
  }
  CheckResult r;
  r.name = "literal-Jacobian mode differs by exactly g * child slope when tau == 0";
  r.pass = worst < 1e-9;
  r.detail = "worst abs deviation " + fmt_err(worst) + " over " + std::to_string(models) + " models";
  return r;
}

CheckResult check_maze_solvable(std::uint64_t seed, int n_mazes) {
  int solvable = 0;
  bool borders_ok = true, distinct_ok = true;
  for (int i = 0; i < n_mazes; ++i) {
    const maze::MazeState m = maze::generate(seed + static_cast<std::uint64_t>(i));
    if (bfs_distance(m, m.agent, m.key) > 0) ++solvable;
    for (int r = 0; r < m.height; ++r)
      if (!m.wall(r, 0) || !m.wall(r, m.width - 1)) borders_ok = false;
    for (int c = 0; c < m.width; ++c)
      if (!m.wall(0, c) || !m.wall(m.height - 1, c)) borders_ok = false;
    if (m.agent == m.key) distinct_ok = false;
  }
  CheckResult r;
  r.name = "maze generation: BFS-solvable, walled borders, distinct agent/key";
  r.pass = solvable == n_mazes && borders_ok && distinct_ok;
  r.detail = std::to_string(solvable) + "/" + std::to_string(n_mazes) + " solvable";
  return r;
}

CheckResult check_env_protocol(std::uint64_t seed, std::int64_t n_transitions) {
  const maze::EnvConfig env;
  std::int64_t count = 0, terminals = 0, key_rewards = 0;
  bool support_ok = true;
  maze::collect_offpolicy(n_transitions, seed, [&](const maze::Transition& t) {
    ++count;
    const bool key = t.r == 1.0f && t.discount == 0.0f;
    const bool move = t.r == -0.1f && t.discount == static_cast<float>(env.gamma_env);
    if (!key && !move) support_ok = false;
    if (t.discount == 0.0f) ++terminals;
    if (t.r == 1.0f) ++key_rewards;
  });
  CheckResult r;
  r.name = "environment protocol: reward/discount support and terminal marking";
  r.pass = support_ok && count == n_transitions && terminals == key_rewards;
  r.detail = std::to_string(count) + " transitions, " + std::to_string(terminals) + " terminal";
  return r;
}

std::vector<CheckResult> run_verification(std::uint64_t seed, bool quick) {
  const int op_trials = quick ? 100 : 1000;
  const int comps = quick ? 20 : 100;
  const int second = quick ? 5 : 20;
  const int planner_models = quick ? 10 : 50;
  const int grad_models = quick ? 10 : 50;
  const int mazes = quick ? 200 : 1000;
  const std::int64_t transitions = quick ? 2000 : 20000;
  return {
      check_op_gradients(seed, op_trials),
      check_composition_gradients(seed, comps),
      check_second_order(seed, second),
      check_planner_enumeration(seed, planner_models),
      check_grad_recursion(seed, grad_models),
      check_paper_jacobian_mode(seed, grad_models),
      check_maze_solvable(seed, mazes),
      check_env_protocol(seed, transitions),
  };
}

}  // namespace gmas
