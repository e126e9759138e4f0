// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "gmas/planner.hpp"
#include "gmas/verify.hpp"

using namespace gmas;

namespace {

AgentNets random_model(std::uint64_t seed) { return AgentNets::init(ArchConfig{}, seed); }

std::vector<double> random_x(std::uint64_t seed) {
  Rng rng(seed);
  return {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
}

}  // namespace

TEST_CASE("depth 0 is the model-free Q value") {
  const AgentNets nets = random_model(1);
  const auto x = random_x(2);
  for (int a = 0; a < nets.arch.n_actions; ++a) {
    CHECK(q_at_depth(x, a, 0, nets, QWhich::kLive) ==
          doctest::Approx(q_values(nets, QWhich::kLive, x)[static_cast<std::size_t>(a)]).epsilon(1e-15));
    CHECK(q_at_depth(x, a, 0, nets, QWhich::kFrozen) ==
          doctest::Approx(q_values(nets, QWhich::kFrozen, x)[static_cast<std::size_t>(a)]).epsilon(1e-15));
  }
}

TEST_CASE("depth 1 composes reward, discount and the best child Q") {
  const AgentNets nets = random_model(3);
  const auto x = random_x(4);
  for (int a = 0; a < nets.arch.n_actions; ++a) {
    const double rho = predict_reward(nets, x, a);
    const double disc = predict_discount(nets, x, a);
    const auto x_next = predict_next(nets, x, a);
    const auto child_q = q_values(nets, QWhich::kLive, x_next);
    const double expected = rho + disc * *std::max_element(child_q.begin(), child_q.end());
    CHECK(q_at_depth(x, a, 1, nets, QWhich::kLive) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("full-branching backup equals exhaustive enumeration") {
  const CheckResult r = check_planner_enumeration(5, 12);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("restricting the branching never raises the estimate") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const AgentNets nets = random_model(seed);
    const auto x = random_x(seed * 3);
    for (int d = 1; d <= 3; ++d) {
      for (int a = 0; a < nets.arch.n_actions; ++a) {
        const double full = q_at_depth(x, a, d, nets, QWhich::kLive, nets.arch.n_actions);
        for (int b = 1; b < nets.arch.n_actions; ++b)
          CHECK(q_at_depth(x, a, d, nets, QWhich::kLive, b) <= full + 1e-12);
      }
    }
  }
}

TEST_CASE("q_plan averaging") {
  const AgentNets nets = random_model(8);
  const auto x = random_x(9);
  const int a = 1;
  const double q0 = q_at_depth(x, a, 0, nets, QWhich::kLive);
  const double q1 = q_at_depth(x, a, 1, nets, QWhich::kLive);

  PlanConfig cfg;
  cfg.depth = 0;
  CHECK(q_plan(x, a, cfg, nets, QWhich::kLive) == doctest::Approx(q0).epsilon(1e-15));

  cfg.depth = 1;
  CHECK(q_plan(x, a, cfg, nets, QWhich::kLive) == doctest::Approx((q0 + q1) / 2.0).epsilon(1e-14));

  cfg.denominator = PlanConfig::Denominator::kPaperLiteral;
  CHECK(q_plan(x, a, cfg, nets, QWhich::kLive) == doctest::Approx(q0 + q1).epsilon(1e-14));

  SUBCASE("the literal denominator is undefined at depth 0") {
    cfg.depth = 0;
    CHECK_THROWS_AS((void)q_plan(x, a, cfg, nets, QWhich::kLive), std::invalid_argument);
  }
}

TEST_CASE("acting") {
  const AgentNets nets = random_model(11);
  const auto x = random_x(12);

  SUBCASE("depth 0 reduces to the greedy model-free action") {
    PlanConfig cfg;
    cfg.depth = 0;
    const auto q = q_values(nets, QWhich::kLive, x);
    const int greedy = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
    CHECK(act(x, cfg, nets) == greedy);
  }

  SUBCASE("the chosen action is invariant to the denominator convention") {
    for (int d = 1; d <= 3; ++d) {
      PlanConfig mean_cfg;
      mean_cfg.depth = d;
      PlanConfig literal_cfg = mean_cfg;
      literal_cfg.denominator = PlanConfig::Denominator::kPaperLiteral;
      CHECK(act(x, mean_cfg, nets) == act(x, literal_cfg, nets));
    }
  }

  SUBCASE("matches an enumeration-backed argmax on frozen models") {
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
      const AgentNets model = random_model(seed);
      const auto xs = random_x(seed + 100);
      PlanConfig cfg;
      cfg.depth = 2;
      int oracle_best = 0;
      double oracle_value = 0.0;
      for (int a = 0; a < model.arch.n_actions; ++a) {
        double sum = q_values(model, QWhich::kLive, xs)[static_cast<std::size_t>(a)];
        for (int d = 1; d <= cfg.depth; ++d) sum += enumerate_q_depth(model, QWhich::kLive, xs, a, d);
        const double value = sum / (cfg.depth + 1.0);
        if (a == 0 || value > oracle_value) {
          oracle_best = a;
          oracle_value = value;
        }
      }
      CHECK(act(xs, cfg, model) == oracle_best);
    }
  }
}

TEST_CASE("backup argmax actions") {
  const AgentNets nets = random_model(14);
  const auto x = random_x(15);
  const int a = 2;

  SUBCASE("depth 1 picks the argmax over the child's model-free values") {
    const auto path = best_actions(x, a, 1, nets, QWhich::kFrozen);
    REQUIRE(path.size() == 1);
    const auto child_q = q_values(nets, QWhich::kFrozen, predict_next(nets, x, a));
    CHECK(path[0] == static_cast<int>(std::max_element(child_q.begin(), child_q.end()) - child_q.begin()));
  }

  SUBCASE("paths are deterministic and sized by depth") {
    for (int d = 1; d <= 3; ++d) {
      const auto p1 = best_actions(x, a, d, nets, QWhich::kFrozen);
      const auto p2 = best_actions(x, a, d, nets, QWhich::kFrozen);
      CHECK(p1 == p2);
      CHECK(static_cast<int>(p1.size()) == d);
    }
  }

  SUBCASE("d must be at least 1") {
    CHECK_THROWS_AS((void)best_actions(x, a, 0, nets, QWhich::kFrozen), std::invalid_argument);
  }
}

TEST_CASE("backup argmax breaks ties toward the lowest index") {
  const std::vector<double> tied{0.5, 0.7, 0.7, 0.1};
  CHECK(backup_argmax(tied, 4) == 1);
  CHECK(backup_argmax(tied, 2) == 1);
  const std::vector<double> all_same{0.3, 0.3, 0.3, 0.3};
  CHECK(backup_argmax(all_same, 4) == 0);
  CHECK_THROWS_AS((void)backup_argmax(tied, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)backup_argmax(tied, 5), std::invalid_argument);
}
