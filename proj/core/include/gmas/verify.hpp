// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent oracles and the self-check suite behind the `verify` CLI
// command. Everything here checks the engine from the outside: central
// finite differences against recorded gradients, exhaustive action-sequence
// enumeration against the planner backup, breadth-first search against the
// maze generator. None of it shares code with the reverse-mode pass or the
// backup recursion it validates.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmas/maze.hpp"
#include "gmas/nets.hpp"

namespace gmas {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// |a - b| / max(|a|, |b|, 1e-4): relative everywhere it matters, with an
// absolute floor so finite-difference noise on near-zero values cannot blow
// the ratio up.
double rel_err(double a, double b);

inline constexpr double kFdStep = 1e-5;

// ---- independent oracles

// max over all |A|^depth action sequences of the unrolled planner value;
// direct nested evaluation, no sharing with the backup recursion
double enumerate_q_depth(const AgentNets& nets, QWhich which, std::span<const double> x, int action, int depth);

// planner value following a fixed backup path (the differentiated scalar of
// the gradient recursion); frozen Q at the base
double q_fixed_path(const AgentNets& nets, std::span<const double> x, int action, std::span<const int> path);

// shortest path length in steps, -1 when unreachable
int bfs_distance(const maze::MazeState& state, maze::GridPos from, maze::GridPos to);

// ---- check suites (counts are per-instance trial counts)

CheckResult check_op_gradients(std::uint64_t seed, int trials_per_op);
CheckResult check_composition_gradients(std::uint64_t seed, int instances);
CheckResult check_second_order(std::uint64_t seed, int instances);
CheckResult check_planner_enumeration(std::uint64_t seed, int models);
CheckResult check_grad_recursion(std::uint64_t seed, int models);
CheckResult check_paper_jacobian_mode(std::uint64_t seed, int models);
CheckResult check_maze_solvable(std::uint64_t seed, int n_mazes);
CheckResult check_env_protocol(std::uint64_t seed, std::int64_t n_transitions);

// the `verify` command: quick = CLI-sized trial counts
std::vector<CheckResult> run_verification(std::uint64_t seed, bool quick = true);

}  // namespace gmas
