// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <limits>
#include <set>
#include <stdexcept>

#include "gmas/maze.hpp"
#include "gmas/rng.hpp"
#include "gmas/verify.hpp"

using namespace gmas;
using namespace gmas::maze;

namespace {

// deterministic policy that never steps onto the key: prefer an action whose
// target cell is a wall (stays put), otherwise any non-key neighbor
int avoid_key_policy(const MazeState& s) {
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  for (int a = 0; a < kNumActions; ++a)
    if (s.wall(s.agent.row + dr[a], s.agent.col + dc[a])) return a;
  for (int a = 0; a < kNumActions; ++a) {
    const GridPos target{s.agent.row + dr[a], s.agent.col + dc[a]};
    if (!(target == s.key)) return a;
  }
  return 0;
}

// BFS-greedy shortest-path policy
int optimal_policy(const MazeState& s) {
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  int best_action = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (int a = 0; a < kNumActions; ++a) {
    const int nr = s.agent.row + dr[a], nc = s.agent.col + dc[a];
    if (s.wall(nr, nc)) continue;
    MazeState probe = s;
    probe.agent = {nr, nc};
    const int d = bfs_distance(probe, probe.agent, probe.key);
    if (d >= 0 && d < best_dist) {
      best_dist = d;
      best_action = a;
    }
  }
  return best_action;
}

int count_changed_blocks(const Observation& a, const Observation& b, int grid) {
  const int block = kObsSide / grid;
  int changed = 0;
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c) {
      bool diff = false;
      for (int i = 0; i < block && !diff; ++i)
        for (int j = 0; j < block && !diff; ++j) {
          const std::size_t px = static_cast<std::size_t>(r * block + i) * kObsSide + c * block + j;
          if (a.pixels[px] != b.pixels[px]) diff = true;
        }
      if (diff) ++changed;
    }
  return changed;
}

}  // namespace

TEST_CASE("generation is deterministic and well-formed") {
  const MazeState a = generate(7);
  const MazeState b = generate(7);
  CHECK(a.walls == b.walls);
  CHECK(a.agent == b.agent);
  CHECK(a.key == b.key);
  CHECK_FALSE(a.terminal());

  for (int r = 0; r < a.height; ++r) {
    CHECK(a.wall(r, 0));
    CHECK(a.wall(r, a.width - 1));
  }
  for (int c = 0; c < a.width; ++c) {
    CHECK(a.wall(0, c));
    CHECK(a.wall(a.height - 1, c));
  }
}

TEST_CASE("every generated maze is BFS-solvable") {
  const CheckResult r = check_maze_solvable(1, 300);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("rendering") {
  const MazeState m = generate(3);
  const Observation obs = render(m);
  REQUIRE(obs.pixels.size() == static_cast<std::size_t>(kObsDim));
  const std::set<float> levels(obs.pixels.begin(), obs.pixels.end());
  for (float v : levels) CHECK((v == -1.0f || v == 0.0f || v == 0.5f || v == 1.0f));

  SUBCASE("agent and key blocks are present on an open grid") {
    MazeState open;
    open.width = open.height = 8;
    open.walls.assign(64, 0);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c)
        if (r == 0 || c == 0 || r == 7 || c == 7) open.walls[static_cast<std::size_t>(r) * 8 + c] = 1;
    open.agent = {1, 1};
    open.key = {6, 6};
    const Observation o = render(open);
    int agent_px = 0, key_px = 0;
    for (float v : o.pixels) {
      agent_px += v == 1.0f;
      key_px += v == 0.5f;
    }
    CHECK(agent_px == 36);  // one 6x6 block each
    CHECK(key_px == 36);
  }

  SUBCASE("a successful move changes exactly two blocks") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      MazeState m2 = generate(seed);
      const Observation before = render(m2);
      constexpr int dr[4] = {-1, 1, 0, 0};
      constexpr int dc[4] = {0, 0, -1, 1};
      int action = -1;
      for (int a = 0; a < kNumActions; ++a) {
        const GridPos t{m2.agent.row + dr[a], m2.agent.col + dc[a]};
        if (!m2.wall(t.row, t.col) && !(t == m2.key)) action = a;
      }
      if (action < 0) continue;
      (void)step(m2, action);
      const Observation after = render(m2);
      CHECK(count_changed_blocks(before, after, m2.width) == 2);
    }
  }

  SUBCASE("grids that do not divide 48 are rejected") {
    EnvConfig bad;
    bad.width = bad.height = 7;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    CHECK_THROWS_AS((void)generate(1, bad), std::invalid_argument);
  }
}

TEST_CASE("step semantics") {
  SUBCASE("blocked moves stay put and still cost the penalty") {
    MazeState m = generate(5);
    int action = -1;
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int a = 0; a < kNumActions; ++a)
      if (m.wall(m.agent.row + dr[a], m.agent.col + dc[a])) action = a;
    REQUIRE(action >= 0);
    const GridPos before = m.agent;
    const StepResult r = step(m, action);
    CHECK(m.agent == before);
    CHECK(r.reward == -0.1);
    CHECK(r.discount == 0.9);
    CHECK_FALSE(r.terminal);
    CHECK(m.steps_taken == 1);
  }

  SUBCASE("reaching the key terminates with +1 and discount 0") {
    MazeState m = generate(5);
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    int action = -1;
    for (int a = 0; a < kNumActions; ++a) {
      const GridPos t{m.agent.row + dr[a], m.agent.col + dc[a]};
      if (!m.wall(t.row, t.col)) {
        m.key = t;
        action = a;
        break;
      }
    }
    REQUIRE(action >= 0);
    const StepResult r = step(m, action);
    CHECK(r.reward == 1.0);
    CHECK(r.discount == 0.0);
    CHECK(r.terminal);
    CHECK(m.terminal());
    CHECK_THROWS_AS((void)step(m, 0), std::logic_error);
  }

  SUBCASE("opposite moves between free cells return to the start") {
    int exercised = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      MazeState m = generate(seed);
      constexpr int dr[4] = {-1, 1, 0, 0};
      constexpr int dc[4] = {0, 0, -1, 1};
      constexpr int opposite[4] = {kDown, kUp, kRight, kLeft};
      for (int a = 0; a < kNumActions; ++a) {
        const GridPos t{m.agent.row + dr[a], m.agent.col + dc[a]};
        if (m.wall(t.row, t.col) || t == m.key) continue;
        MazeState m2 = m;
        const GridPos start = m2.agent;
        (void)step(m2, a);
        if (!(m2.agent == t)) continue;
        const GridPos back{m2.agent.row + dr[opposite[a]], m2.agent.col + dc[opposite[a]]};
        if (back == m2.key) continue;
        (void)step(m2, opposite[a]);
        CHECK(m2.agent == start);
        ++exercised;
        break;
      }
    }
    CHECK(exercised > 10);
  }

  SUBCASE("invalid action indices are rejected") {
    MazeState m = generate(5);
    CHECK_THROWS_AS((void)step(m, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)step(m, -1), std::invalid_argument);
  }
}

TEST_CASE("off-policy collection") {
  const auto transitions = collect_offpolicy(2000, 9);
  CHECK(transitions.size() == 2000);
  int terminal = 0, plus_one = 0;
  for (const auto& t : transitions) {
    CHECK((t.r == 1.0f || t.r == -0.1f));
    CHECK((t.discount == 0.0f || t.discount == 0.9f));
    terminal += t.discount == 0.0f;
    plus_one += t.r == 1.0f;
  }
  CHECK(terminal == plus_one);
  CHECK(terminal > 0);  // random walks do stumble onto keys

  SUBCASE("collection is deterministic in the seed") {
    const auto again = collect_offpolicy(50, 9);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(again[i].a == transitions[i].a);
      CHECK(again[i].r == transitions[i].r);
      CHECK(again[i].s.pixels == transitions[i].s.pixels);
    }
  }
}

TEST_CASE("policy evaluation") {
  SUBCASE("a policy that never reaches the key scores exactly -5.0") {
    const EvalResult r = evaluate_policy(avoid_key_policy, 50, 123);
    for (double s : r.scores) CHECK(s == doctest::Approx(-5.0));
    CHECK(r.mean == doctest::Approx(-5.0));
  }

  SUBCASE("the BFS-optimal policy scores 1 - 0.1 (L - 1) per episode") {
    const int n = 40;
    const EvalResult r = evaluate_policy(optimal_policy, n, 77);
    for (int i = 0; i < n; ++i) {
      const MazeState m = generate(77 + 0xc2b2ae3d27d4eb4full * static_cast<std::uint64_t>(i + 1));
      const int dist = bfs_distance(m, m.agent, m.key);
      REQUIRE(dist > 0);
      const double expected = dist <= 50 ? 1.0 - 0.1 * (dist - 1) : -5.0;
      CHECK(r.scores[static_cast<std::size_t>(i)] == doctest::Approx(expected));
    }
  }

  SUBCASE("random play scores strictly below optimal play on the same mazes") {
    Rng rng(5);
    const auto random_policy = [&](const MazeState&) { return rng.uniform_int(kNumActions); };
    const EvalResult rand_r = evaluate_policy(random_policy, 100, 31);
    const EvalResult opt_r = evaluate_policy(optimal_policy, 100, 31);
    CHECK(rand_r.mean < opt_r.mean);
  }
}
