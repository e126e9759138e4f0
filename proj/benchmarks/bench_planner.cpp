// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "gmas/gradmatch.hpp"
#include "gmas/planner.hpp"
#include "gmas/rng.hpp"

namespace {

using namespace gmas;

void BM_PlannerExpand(benchmark::State& state) {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 1);
  Rng rng(2);
  const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(expand(x, depth, nets, QWhich::kFrozen, nets.arch.n_actions));
}
BENCHMARK(BM_PlannerExpand)->Arg(1)->Arg(3)->Arg(5);

void BM_SlopeTarget(benchmark::State& state) {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 1);
  Rng rng(3);
  const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  PlanConfig cfg;
  cfg.depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grad_plan(x, 0, cfg, nets));
}
BENCHMARK(BM_SlopeTarget)->Arg(0)->Arg(1)->Arg(3);

void BM_MazeGenerateRender(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const maze::MazeState m = maze::generate(++seed);
    benchmark::DoNotOptimize(maze::render(m));
  }
}
BENCHMARK(BM_MazeGenerateRender);

}  // namespace
