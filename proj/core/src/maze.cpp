// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/maze.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gmas/rng.hpp"

namespace gmas::maze {

namespace {

constexpr int kRowDelta[kNumActions] = {-1, 1, 0, 0};
constexpr int kColDelta[kNumActions] = {0, 0, -1, 1};

constexpr float kWallLevel = -1.0f;
constexpr float kFreeLevel = 0.0f;
constexpr float kKeyLevel = 0.5f;
constexpr float kAgentLevel = 1.0f;

int carved_neighbors(const MazeState& m, int r, int c) {
  int count = 0;
  for (int a = 0; a < kNumActions; ++a) {
    const int nr = r + kRowDelta[a], nc = c + kColDelta[a];
    if (nr >= 0 && nr < m.height && nc >= 0 && nc < m.width && !m.wall(nr, nc)) ++count;
  }
  return count;
}

std::vector<GridPos> free_cells(const MazeState& m) {
  std::vector<GridPos> cells;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (!m.wall(r, c)) cells.push_back({r, c});
  return cells;
}

}  // namespace

void validate(const EnvConfig& cfg) {
  if (cfg.width < 4 || cfg.height < 4)
    throw std::invalid_argument("gmas: maze grid must be at least 4x4 including borders");
  if (kObsSide % cfg.width != 0 || kObsSide % cfg.height != 0)
    throw std::invalid_argument("gmas: maze grid " + std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
                                " does not divide the 48x48 observation");
  if (cfg.episode_cap <= 0) throw std::invalid_argument("gmas: episode cap must be positive");
}

MazeState generate(std::uint64_t seed, const EnvConfig& cfg) {
  validate(cfg);
  Rng rng = Rng::derive(seed, 0x6d617a65ull);  // dedicated stream per maze seed

  MazeState m;
  m.width = cfg.width;
  m.height = cfg.height;
  m.walls.assign(static_cast<std::size_t>(m.width) * m.height, 1);

  const auto carve = [&](int r, int c) { m.walls[static_cast<std::size_t>(r) * m.width + c] = 0; };
  const auto interior = [&](int r, int c) { return r >= 1 && r < m.height - 1 && c >= 1 && c < m.width - 1; };

  // Depth-first corridor carving: a wall cell opens only while it touches
  // exactly one carved cell, which keeps the carved region a connected set
  // of corridors and never breaches the border ring.
  const int start_r = 1 + rng.uniform_int(m.height - 2);
  const int start_c = 1 + rng.uniform_int(m.width - 2);
  carve(start_r, start_c);
  std::vector<GridPos> stack{{start_r, start_c}};
  while (!stack.empty()) {
    const GridPos cur = stack.back();
    int order[kNumActions] = {0, 1, 2, 3};
    for (int i = kNumActions - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    bool advanced = false;
    for (int i = 0; i < kNumActions && !advanced; ++i) {
      const int nr = cur.row + kRowDelta[order[i]];
      const int nc = cur.col + kColDelta[order[i]];
      if (!interior(nr, nc) || !m.wall(nr, nc)) continue;
      if (carved_neighbors(m, nr, nc) != 1) continue;
      carve(nr, nc);
      stack.push_back({nr, nc});
      advanced = true;
    }
    if (!advanced) stack.pop_back();
  }

  const std::vector<GridPos> cells = free_cells(m);
  const int agent_idx = rng.uniform_int(static_cast<int>(cells.size()));
  int key_idx = rng.uniform_int(static_cast<int>(cells.size()) - 1);
  if (key_idx >= agent_idx) ++key_idx;  // distinct by construction
  m.agent = cells[static_cast<std::size_t>(agent_idx)];
  m.key = cells[static_cast<std::size_t>(key_idx)];
  return m;
}

Observation render(const MazeState& state, const EnvConfig& cfg) {
  validate(cfg);
  const int block_w = kObsSide / state.width;
  const int block_h = kObsSide / state.height;
  Observation obs;
  obs.pixels.assign(kObsDim, kFreeLevel);
  const auto fill = [&](int r, int c, float level) {
    for (int i = 0; i < block_h; ++i) {
      float* row = obs.pixels.data() + static_cast<std::size_t>(r * block_h + i) * kObsSide + c * block_w;
      std::fill(row, row + block_w, level);
    }
  };
  for (int r = 0; r < state.height; ++r)
    for (int c = 0; c < state.width; ++c)
      if (state.wall(r, c)) fill(r, c, kWallLevel);
  fill(state.key.row, state.key.col, kKeyLevel);
  fill(state.agent.row, state.agent.col, kAgentLevel);
  return obs;
}

StepResult step(MazeState& state, int action, const EnvConfig& cfg) {
  if (action < 0 || action >= kNumActions)
    throw std::invalid_argument("gmas: invalid action index " + std::to_string(action));
  if (state.terminal()) throw std::logic_error("gmas: step() called on a terminal maze state");

  const int nr = state.agent.row + kRowDelta[action];
  const int nc = state.agent.col + kColDelta[action];
  if (nr >= 0 && nr < state.height && nc >= 0 && nc < state.width && !state.wall(nr, nc)) state.agent = {nr, nc};
  ++state.steps_taken;

  StepResult result;
  if (state.terminal()) {
    result.reward = cfg.key_reward;
    result.discount = 0.0;
    result.terminal = true;
  } else {
    result.reward = cfg.step_penalty;
    result.discount = cfg.gamma_env;
    result.terminal = false;
  }
  result.observation = render(state, cfg);
  return result;
}

void collect_offpolicy(std::int64_t n, std::uint64_t seed, const std::function<void(const Transition&)>& sink,
                       const EnvConfig& cfg) {
  if (n <= 0) throw std::invalid_argument("gmas: collect_offpolicy needs n > 0");
  validate(cfg);
  Rng actions = Rng::derive(seed, 0x616374ull);
  std::uint64_t episode = 0;
  std::int64_t produced = 0;
  while (produced < n) {
    MazeState state = generate(seed + 0x9e3779b97f4a7c15ull * (++episode), cfg);
    Observation obs = render(state, cfg);
    for (int t = 0; t < cfg.episode_cap && produced < n && !state.terminal(); ++t) {
      const int a = actions.uniform_int(kNumActions);
      StepResult r = step(state, a, cfg);
      Transition tr;
      tr.s = std::move(obs);
      tr.a = static_cast<std::uint8_t>(a);
      tr.r = static_cast<float>(r.reward);
      tr.discount = static_cast<float>(r.discount);
      tr.s2 = r.observation;
      sink(tr);
      obs = std::move(r.observation);
      ++produced;
    }
  }
}

std::vector<Transition> collect_offpolicy(std::int64_t n, std::uint64_t seed, const EnvConfig& cfg) {
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(n));
  collect_offpolicy(n, seed, [&](const Transition& t) { out.push_back(t); }, cfg);
  return out;
}

double EvalResult::stddev() const {
  if (scores.size() < 2) return 0.0;
  double sq = 0.0;
  for (double s : scores) sq += (s - mean) * (s - mean);
  return std::sqrt(sq / static_cast<double>(scores.size()));
}

EvalResult evaluate_policy(const std::function<int(const MazeState&)>& policy, int n_mazes, std::uint64_t seed,
                           const EnvConfig& cfg) {
  if (n_mazes <= 0) throw std::invalid_argument("gmas: evaluate_policy needs n_mazes > 0");
  validate(cfg);
  EvalResult result;
  result.scores.reserve(static_cast<std::size_t>(n_mazes));
  for (int i = 0; i < n_mazes; ++i) {
    MazeState state = generate(seed + 0xc2b2ae3d27d4eb4full * static_cast<std::uint64_t>(i + 1), cfg);
    double score = 0.0;
    for (int t = 0; t < cfg.episode_cap && !state.terminal(); ++t) {
      const int a = policy(state);
      score += step(state, a, cfg).reward;
    }
    result.scores.push_back(score);
    result.mean += score;
  }
  result.mean /= static_cast<double>(n_mazes);
  return result;
}

}  // namespace gmas::maze
