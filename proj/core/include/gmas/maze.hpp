// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedurally generated labyrinth task. Every reset carves a fresh maze;
// the agent collects a key for +1 and pays -0.1 per step. A transition's
// discount doubles as the terminal flag (0 on the key, gamma_env otherwise).

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace gmas::maze {

inline constexpr int kObsSide = 48;
inline constexpr int kObsDim = kObsSide * kObsSide;
inline constexpr int kNumActions = 4;

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridPos {
  int row = 0;
  int col = 0;
  bool operator==(const GridPos&) const = default;
};

struct EnvConfig {
  int width = 8;   // full grid including the border wall ring
  int height = 8;
  double gamma_env = 0.9;
  double step_penalty = -0.1;
  double key_reward = 1.0;
  int episode_cap = 50;
};

// Throws if the grid cannot be rendered onto the 48x48 observation.
void validate(const EnvConfig& cfg);

struct MazeState {
  int width = 8;
  int height = 8;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  GridPos agent;
  GridPos key;
  int steps_taken = 0;

  bool wall(int r, int c) const { return walls[static_cast<std::size_t>(r) * width + c] != 0; }
  bool terminal() const { return agent == key; }
};

struct Observation {
  std::vector<float> pixels;  // kObsDim values in [-1, 1], row-major
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  double discount = 0.0;
  bool terminal = false;
};

struct Transition {
  Observation s;
  std::uint8_t a = 0;
  float r = 0.0f;
  float discount = 0.0f;
  Observation s2;
};

// Seeded depth-first carving over the interior; agent and key land on
// distinct free cells. Identical seeds give identical mazes.
MazeState generate(std::uint64_t seed, const EnvConfig& cfg = {});

// Gray levels: wall -1.0, free 0.0, key 0.5, agent 1.0 (agent drawn on top).
Observation render(const MazeState& state, const EnvConfig& cfg = {});

// Moves one cell unless blocked (blocked keeps the position but still costs
// the step penalty). Throws when called on a terminal state.
StepResult step(MazeState& state, int action, const EnvConfig& cfg = {});

// Uniform-random behavior policy; a fresh maze is generated on every reset
// and episodes are also reset after cfg.episode_cap steps.
void collect_offpolicy(std::int64_t n, std::uint64_t seed, const std::function<void(const Transition&)>& sink,
                       const EnvConfig& cfg = {});
std::vector<Transition> collect_offpolicy(std::int64_t n, std::uint64_t seed, const EnvConfig& cfg = {});

struct EvalResult {
  double mean = 0.0;
  std::vector<double> scores;
  double stddev() const;
};

// One episode per fresh maze, capped at cfg.episode_cap steps; per-episode
// score is the plain sum of rewards.
EvalResult evaluate_policy(const std::function<int(const MazeState&)>& policy, int n_mazes, std::uint64_t seed,
                           const EnvConfig& cfg = {});

}  // namespace gmas::maze
