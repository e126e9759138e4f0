// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gmas/checkpoint.hpp"
#include "gmas/dataset.hpp"
#include "gmas/train.hpp"
#include "gmas/verify.hpp"

using namespace gmas;

namespace {

const ReplayBuffer& shared_buffer() {
  static const ReplayBuffer buf = ReplayBuffer::from_transitions(maze::collect_offpolicy(600, 3));
  return buf;
}

RunConfig quick_config() {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.iterations = 12;
  cfg.batch_size = 8;
  cfg.eval_every = 6;
  cfg.n_eval_mazes = 3;
  cfg.freeze_interval = 5;
  cfg.train_depth = 1;
  cfg.alpha = 0.05;
  return cfg;
}

std::vector<double> flat_params(const AgentNets& nets) {
  std::vector<double> all;
  for (const auto& [_, t] : nets.params) all.insert(all.end(), t.data.begin(), t.data.end());
  return all;
}

}  // namespace

TEST_CASE("training smoke run stays finite and learns the transition model") {
  RunConfig cfg = quick_config();
  cfg.iterations = 150;
  cfg.eval_every = 50;
  cfg.alpha = 0.05;
  double first_tau = -1.0, last_tau = -1.0;
  cfg.on_iteration = [&](const IterationStats& s, const AgentNets&) {
    if (s.iteration == 1) first_tau = s.loss_transition;
    last_tau = s.loss_transition;
    CHECK(std::isfinite(s.total));
  };
  const TrainResult result = train(cfg, shared_buffer());
  REQUIRE(result.rows.size() == 3);
  CHECK(last_tau < first_tau);
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    CHECK(result.rows[i].iteration > result.rows[i - 1].iteration);
  for (const MetricsRow& row : result.rows) {
    CHECK(row.eval_mean >= -5.0 - 1e-9);
    CHECK(row.eval_mean <= 1.0 + 1e-9);
    CHECK(row.seconds == 0.0);  // wall clock stays out of the CSV by default
  }
}

TEST_CASE("the baseline path never builds second-order nodes") {
  RunConfig cfg = quick_config();
  cfg.alpha = 0.0;
  std::size_t max_recorded = 0;
  cfg.on_iteration = [&](const IterationStats& s, const AgentNets&) {
    max_recorded = std::max(max_recorded, s.recorded_nodes);
    CHECK(s.loss_gmas == 0.0);
  };
  (void)train(cfg, shared_buffer());
  CHECK(max_recorded == 0);

  SUBCASE("the matching path does") {
    RunConfig on = quick_config();
    std::size_t recorded = 0;
    on.on_iteration = [&](const IterationStats& s, const AgentNets&) { recorded = s.recorded_nodes; };
    (void)train(on, shared_buffer());
    CHECK(recorded > 0);
  }
}

TEST_CASE("an alpha=0 run and a matching run share everything up to the first step") {
  RunConfig base = quick_config();
  base.iterations = 2;
  base.alpha = 0.0;
  RunConfig gmas_cfg = base;
  gmas_cfg.alpha = 0.05;

  std::vector<IterationStats> stats_base, stats_gmas;
  std::vector<std::vector<double>> params_base, params_gmas;
  base.on_iteration = [&](const IterationStats& s, const AgentNets& n) {
    stats_base.push_back(s);
    params_base.push_back(flat_params(n));
  };
  gmas_cfg.on_iteration = [&](const IterationStats& s, const AgentNets& n) {
    stats_gmas.push_back(s);
    params_gmas.push_back(flat_params(n));
  };
  (void)train(base, shared_buffer());
  (void)train(gmas_cfg, shared_buffer());

  // iteration 1 sees identical parameters, batches and
  // representation losses; only the matching term differs
  CHECK(stats_base[0].loss_reward == stats_gmas[0].loss_reward);
  CHECK(stats_base[0].loss_transition == stats_gmas[0].loss_transition);
  CHECK(stats_base[0].loss_td == stats_gmas[0].loss_td);
  CHECK(stats_base[0].loss_gmas == 0.0);
  CHECK(stats_gmas[0].loss_gmas != 0.0);
  // gradients differ from the first step on
  CHECK(params_base[0] != params_gmas[0]);
}

TEST_CASE("two identical configurations produce bit-identical runs") {
  RunConfig cfg = quick_config();
  std::vector<std::vector<double>> params_a, params_b;
  cfg.on_iteration = [&](const IterationStats&, const AgentNets& n) { params_a.push_back(flat_params(n)); };
  const TrainResult a = train(cfg, shared_buffer());
  cfg.on_iteration = [&](const IterationStats&, const AgentNets& n) { params_b.push_back(flat_params(n)); };
  const TrainResult b = train(cfg, shared_buffer());

  CHECK(params_a == params_b);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(metrics_csv_row(a.rows[i]) == metrics_csv_row(b.rows[i]));
}

TEST_CASE("the frozen copy follows the freeze cadence") {
  RunConfig cfg = quick_config();
  cfg.iterations = 12;
  cfg.freeze_interval = 5;
  int syncs_observed = 0;
  cfg.on_iteration = [&](const IterationStats& s, const AgentNets& n) {
    const bool synced = n.params.at("q_frozen.l1.w").data == n.params.at("q.l1.w").data;
    if (s.iteration % 5 == 0) {
      CHECK(synced);
      ++syncs_observed;
    } else {
      // live Q drifts away from the frozen copy between syncs
      CHECK_FALSE(synced);
    }
  };
  (void)train(cfg, shared_buffer());
  CHECK(syncs_observed == 2);  // floor(12 / 5)
}

TEST_CASE("non-finite data aborts with the iteration and component") {
  auto transitions = maze::collect_offpolicy(32, 4);
  transitions[5].r = std::nanf("");
  const ReplayBuffer poisoned = ReplayBuffer::from_transitions(transitions);
  RunConfig cfg = quick_config();
  cfg.iterations = 50;
  try {
    (void)train(cfg, poisoned);
    FAIL("expected an abort");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("iteration") != std::string::npos);
    CHECK(msg.find("loss_") != std::string::npos);
  }
}

TEST_CASE("the file pipeline round-trips: dataset in, metrics and checkpoint out") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gmas_train_test";
  fs::create_directories(dir);
  const std::string data_path = (dir / "data.gmasdata").string();
  {
    DatasetWriter writer(data_path, 400);
    maze::collect_offpolicy(400, 11, [&](const maze::Transition& t) { writer.append(t); });
    writer.close();
  }

  RunConfig cfg = quick_config();
  cfg.data_path = data_path;
  cfg.out_dir = (dir / "run").string();
  const TrainResult result = train(cfg);

  REQUIRE(fs::exists(result.metrics_path));
  REQUIRE(fs::exists(result.checkpoint_path));

  std::ifstream csv(result.metrics_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "iteration,loss_r,loss_g,loss_tau,loss_d1,loss_d2,loss_mf,loss_gmas,eval_mean,eval_std,seconds");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == static_cast<int>(result.rows.size()));

  const AgentNets restored = AgentNets::from_params(load_checkpoint(result.checkpoint_path));
  CHECK(flat_params(restored) == flat_params(result.nets));
  CHECK(restored.arch.n_x == cfg.arch.n_x);

  fs::remove_all(dir);
}

TEST_CASE("evaluation depth 0 is the greedy model-free policy") {
  const AgentNets nets = AgentNets::init(ArchConfig{}, 21);
  PlanConfig plan;
  plan.depth = 0;
  const maze::EvalResult via_planner = evaluate(nets, plan, 10, 77);

  const auto greedy = [&](const maze::MazeState& s) {
    const auto obs = maze::render(s);
    const auto x = encode(nets, obs.pixels);
    const auto q = q_values(nets, QWhich::kLive, x);
    int best = 0;
    for (int a = 1; a < nets.arch.n_actions; ++a)
      if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
    return best;
  };
  const maze::EvalResult via_greedy = maze::evaluate_policy(greedy, 10, 77);
  CHECK(via_planner.scores == via_greedy.scores);
  for (double s : via_planner.scores) {
    CHECK(s >= -5.0 - 1e-9);
    CHECK(s <= 1.0 + 1e-9);
  }

  SUBCASE("identical seeds give identical evaluations") {
    const maze::EvalResult again = evaluate(nets, plan, 10, 77);
    CHECK(again.scores == via_planner.scores);
  }
}

TEST_CASE("run configuration validation") {
  RunConfig cfg = quick_config();
  cfg.iterations = 0;
  CHECK_THROWS_AS((void)train(cfg, shared_buffer()), std::invalid_argument);
  cfg = quick_config();
  cfg.alpha = -0.5;
  CHECK_THROWS_AS((void)train(cfg, shared_buffer()), std::invalid_argument);
  cfg = quick_config();
  cfg.gamma_prime = 1.5;
  CHECK_THROWS_AS((void)train(cfg, shared_buffer()), std::invalid_argument);
  cfg = quick_config();
  cfg.denominator = PlanConfig::Denominator::kPaperLiteral;  // undefined at eval depth 0
  CHECK_THROWS_AS((void)train(cfg, shared_buffer()), std::invalid_argument);
  cfg = quick_config();
  cfg.data_path.clear();
  CHECK_THROWS_AS((void)train(cfg), std::invalid_argument);
}
