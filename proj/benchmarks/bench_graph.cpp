// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "gmas/nets.hpp"
#include "gmas/rng.hpp"

namespace {

using namespace gmas;

Tensor random_matrix(Rng& rng, int r, int c) {
  Tensor t = Tensor::zeros({r, c});
  for (auto& v : t.data) v = rng.uniform(-1, 1);
  return t;
}

void BM_MatmulEncoderL1(benchmark::State& state) {
  Rng rng(1);
  const Tensor w = random_matrix(rng, 200, 2304);
  const Tensor x = random_matrix(rng, 2304, static_cast<int>(state.range(0)));
  std::vector<double> y(static_cast<std::size_t>(200) * state.range(0));
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    kern::matmul(w.data.data(), x.data.data(), y.data(), 200, 2304, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 200 * 2304 * state.range(0));
}
BENCHMARK(BM_MatmulEncoderL1)->Arg(32)->Arg(96);

void BM_EncoderForward(benchmark::State& state) {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 1);
  Rng rng(2);
  const Tensor obs = random_matrix(rng, nets.arch.obs_dim, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Graph g;
    const BoundParams bound = bind_live(g, nets);
    benchmark::DoNotOptimize(encode_g(g, bound, g.constant(obs)));
  }
}
BENCHMARK(BM_EncoderForward)->Arg(32)->Arg(96);

void BM_EncoderForwardBackward(benchmark::State& state) {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 1);
  Rng rng(3);
  const Tensor obs = random_matrix(rng, nets.arch.obs_dim, static_cast<int>(state.range(0)));
  const std::vector<std::string> live = nets.live_names();
  for (auto _ : state) {
    Graph g;
    const BoundParams bound = bind_live(g, nets);
    const Tensor x = encode_g(g, bound, g.constant(obs));
    const Tensor loss = g.mean(g.square(x));
    std::vector<Tensor> wrt;
    for (const auto& name : live) wrt.push_back(bound(name));
    benchmark::DoNotOptimize(g.gradient(loss, wrt));
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(32)->Arg(96);

void BM_SecondOrderLiveSlope(benchmark::State& state) {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 1);
  Rng rng(4);
  for (auto _ : state) {
    Graph g;
    const BoundParams bound = bind_live(g, nets);
    const Tensor x = g.leaf(Tensor::vec({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    const Tensor q = q_values_g(g, bound, x);
    const Tensor q_sel = g.dot(q, g.constant(Tensor::vec({1, 0, 0, 0})));
    benchmark::DoNotOptimize(g.gradient_as_graph(q_sel, x));
  }
}
BENCHMARK(BM_SecondOrderLiveSlope);

}  // namespace
