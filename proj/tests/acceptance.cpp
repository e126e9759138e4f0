// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion prints one pass/fail line; the soft
// statistical trend criterion is reported but does not affect the exit
// status, every other criterion does. Temp artifacts live under
// /tmp/gmaslab_acceptance and are removed on success.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gmas/checkpoint.hpp"
#include "gmas/dataset.hpp"
#include "gmas/gradmatch.hpp"
#include "gmas/train.hpp"
#include "gmas/verify.hpp"

using namespace gmas;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  bool soft = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<Criterion> g_results;

void record(int id, const std::string& name, bool pass, const std::string& detail, double seconds,
            bool soft = false) {
  g_results.push_back({id, name, pass, soft, detail, seconds});
  std::printf("[%s] criterion %d: %s -- %s (%.1fs)\n", pass ? "PASS" : (soft ? "FAIL (soft)" : "FAIL"), id,
              name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

template <typename Fn>
void run_criterion(int id, const std::string& name, double time_limit_s, bool soft, Fn&& fn) {
  const auto t0 = Clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = fn();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (time_limit_s > 0 && secs > time_limit_s) {
    pass = false;
    detail += " [exceeded " + std::to_string(static_cast<int>(time_limit_s)) + "s runtime bound]";
  }
  record(id, name, pass, detail, secs, soft);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GMASLAB_CLI_PATH) + " " + args;
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kWorkDir = "/tmp/gmaslab_acceptance";

// ---- criterion bodies -----------------------------------------------------

std::pair<bool, std::string> criterion_first_order() {
  const CheckResult ops = check_op_gradients(1001, 1000);
  const CheckResult comps = check_composition_gradients(1002, 100);
  return {ops.pass && comps.pass, "ops: " + ops.detail + "; compositions: " + comps.detail};
}

std::pair<bool, std::string> criterion_second_order() {
  const CheckResult r = check_second_order(1003, 20);
  return {r.pass, r.detail};
}

std::pair<bool, std::string> criterion_planner() {
  const CheckResult r = check_planner_enumeration(1004, 50);
  return {r.pass, r.detail};
}

std::pair<bool, std::string> criterion_grad_recursion() {
  const CheckResult fd = check_grad_recursion(1005, 50);
  const CheckResult paper = check_paper_jacobian_mode(1006, 50);
  return {fd.pass && paper.pass, fd.detail + "; literal-mode gap: " + paper.detail};
}

std::pair<bool, std::string> criterion_loss_units() {
  Graph g;
  bool ok = true;
  std::string detail;

  const Tensor x = g.constant(Tensor::vec({0.2, -0.4, 0.6}));
  ok &= loss_entropy(g, x, x, 5.0).item() == 1.0;

  const Tensor a = g.constant(Tensor::vec({0.0, 0.0, 0.0}));
  const Tensor b = g.constant(Tensor::vec({1.0, 0.0, 0.0}));
  const double e5 = loss_entropy(g, a, b, 5.0).item();
  ok &= std::fabs(e5 - 6.737946999085467e-3) <= 1e-6;

  ok &= loss_linf(g, g.constant(Tensor::vec({0.5, -0.3, 0.1}))).item() == 0.0;
  ok &= loss_linf(g, g.constant(Tensor::vec({2.0, 0.0, 0.0}))).item() == 1.0;
  ok &= loss_linf(g, g.constant(Tensor::vec({-1.5, 0.2, 0.0}))).item() == 0.5;

  const std::vector<double> u{1.0, 2.0, -1.0};
  const std::vector<double> aligned{2.0, 4.0, -2.0};
  const std::vector<double> opposed{-1.0, -2.0, 1.0};
  const std::vector<double> ortho{2.0, -1.0, 0.0};
  ok &= std::fabs(distance(u, aligned, DistanceKind::kCosine)) <= 1e-12;
  ok &= std::fabs(distance(u, ortho, DistanceKind::kCosine) - 1.0) <= 1e-12;
  ok &= std::fabs(distance(u, opposed, DistanceKind::kCosine) - 2.0) <= 1e-12;

  // terminal transitions: Y reduces to the raw reward exactly
  const AgentNets nets = AgentNets::init(ArchConfig{}, 77);
  const auto transitions = maze::collect_offpolicy(512, 78);
  const ReplayBuffer buf = ReplayBuffer::from_transitions(transitions);
  std::vector<std::int64_t> term_idx;
  for (std::int64_t i = 0; i < buf.size() && term_idx.size() < 8; ++i)
    if (buf.discount(i) == 0.0f) term_idx.push_back(i);
  if (term_idx.empty()) return {false, "no terminal transitions found in the sample"};
  const BatchData batch = make_batch(buf, term_idx);
  Graph g2;
  const BoundParams bound = bind_live(g2, nets);
  const Tensor x_next = encode_g(g2, bound, g2.constant(batch.next_obs));
  const std::vector<double> y = ddqn_target(nets, batch, x_next.data);
  for (std::size_t i = 0; i < y.size(); ++i) ok &= y[i] == batch.rewards.data[i];

  detail = "entropy(1, exp(-5)), linf(0, 1, 0.5), cosine(0, 1, 2), terminal Y == r";
  return {ok, detail};
}

std::pair<bool, std::string> criterion_baseline_identity(const ReplayBuffer& buffer) {
  RunConfig cfg;
  cfg.seed = 2024;
  cfg.iterations = 100;
  cfg.batch_size = 32;
  cfg.alpha = 0.0;  // the plain agent configuration
  cfg.eval_every = 100;
  cfg.n_eval_mazes = 5;

  struct Trace {
    std::vector<IterationStats> stats;
    std::vector<std::vector<double>> params;
    std::size_t recorded = 0;
  };
  const auto run = [&](RunConfig c) {
    Trace t;
    c.on_iteration = [&](const IterationStats& s, const AgentNets& n) {
      t.stats.push_back(s);
      std::vector<double> flat;
      for (const auto& [_, p] : n.params) flat.insert(flat.end(), p.data.begin(), p.data.end());
      t.params.push_back(std::move(flat));
      t.recorded = std::max(t.recorded, s.recorded_nodes);
    };
    (void)train(c, buffer);
    return t;
  };

  const Trace a = run(cfg);
  const Trace b = run(cfg);
  bool ok = a.stats.size() == 100 && b.stats.size() == 100;
  for (std::size_t i = 0; ok && i < a.stats.size(); ++i) {
    ok &= a.stats[i].loss_reward == b.stats[i].loss_reward;
    ok &= a.stats[i].loss_discount == b.stats[i].loss_discount;
    ok &= a.stats[i].loss_transition == b.stats[i].loss_transition;
    ok &= a.stats[i].loss_entropy == b.stats[i].loss_entropy;
    ok &= a.stats[i].loss_linf == b.stats[i].loss_linf;
    ok &= a.stats[i].loss_td == b.stats[i].loss_td;
    ok &= a.stats[i].loss_gmas == 0.0 && b.stats[i].loss_gmas == 0.0;
    ok &= a.params[i] == b.params[i];
  }
  const bool no_second_order = a.recorded == 0 && b.recorded == 0;
  return {ok && no_second_order,
          std::string("100 iterations bit-identical field-by-field; second-order nodes built: ") +
              std::to_string(a.recorded)};
}

std::pair<bool, std::string> criterion_env_protocol() {
  // reward/discount support and episode cap through the library
  const CheckResult proto = check_env_protocol(3001, 20000);
  const CheckResult solvable = check_maze_solvable(3002, 1000);

  bool cap_ok = true;
  const auto counting_policy = [&](const maze::MazeState& s) {
    cap_ok &= s.steps_taken < 50;
    return s.steps_taken % maze::kNumActions;
  };
  (void)maze::evaluate_policy(counting_policy, 50, 3003);

  // the dataset path end to end through the CLI at the full size
  const fs::path big = kWorkDir / "offpolicy_1e5.gmasdata";
  const int rc = run_cli("collect --n 100000 --seed 1 --out " + big.string() + " > /dev/null");
  bool collect_ok = rc == 0;
  std::uint64_t n_header = 0;
  if (collect_ok) {
    const DatasetHeader h = read_dataset_header(big.string());
    n_header = h.n;
    const std::uintmax_t expected_bytes =
        24 + static_cast<std::uintmax_t>(h.n) * (2 * 4 * h.obs_dim + 1 + 4 + 4);
    collect_ok = h.n == 100000 && h.obs_dim == static_cast<std::uint32_t>(maze::kObsDim) &&
                 fs::file_size(big) == expected_bytes;
  }
  fs::remove(big);

  const bool ok = proto.pass && solvable.pass && cap_ok && collect_ok;
  return {ok, proto.detail + "; " + solvable.detail + "; episode cap 50 held; CLI collect wrote n=" +
                  std::to_string(n_header) + " records"};
}

std::pair<bool, std::string> criterion_trend(const ReplayBuffer& buffer) {
  const std::uint64_t eval_seed_shared = 424242;  // same mazes for both arms
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.iterations = 5000;
    cfg.batch_size = 32;
    cfg.lr = 1e-3;
    cfg.freeze_interval = 1000;
    cfg.train_depth = 1;
    cfg.eval_depth = 0;
    cfg.dist = DistanceKind::kCosine;
    cfg.eval_every = 1000;
    cfg.n_eval_mazes = 50;

    RunConfig base = cfg;
    base.alpha = 0.0;
    RunConfig gmas_cfg = cfg;
    gmas_cfg.alpha = 0.05;

    std::printf("  [trend] seed %llu baseline...\n", static_cast<unsigned long long>(seed));
    std::fflush(stdout);
    const TrainResult base_run = train(base, buffer);
    std::printf("  [trend] seed %llu gradient matching...\n", static_cast<unsigned long long>(seed));
    std::fflush(stdout);
    const TrainResult gmas_run = train(gmas_cfg, buffer);

    const PlanConfig plan = plan_config_for_eval(cfg);
    const double base_score = evaluate(base_run.nets, plan, 50, eval_seed_shared).mean;
    const double gmas_score = evaluate(gmas_run.nets, plan, 50, eval_seed_shared).mean;
    wins += gmas_score >= base_score;
    detail += "seed " + std::to_string(seed) + ": gmas " + std::to_string(gmas_score) + " vs base " +
              std::to_string(base_score) + "; ";
  }
  detail += std::to_string(wins) + "/3 seeds at or above the baseline";
  return {wins >= 2, detail};
}

std::pair<bool, std::string> criterion_determinism(const std::string& data_path) {
  const fs::path out_a = kWorkDir / "det_a";
  const fs::path out_b = kWorkDir / "det_b";
  const std::string common = "train --data " + data_path +
                             " --seed 7 --iters 300 --batch 32 --alpha 0.05 --dist cosine --train-depth 1 "
                             "--eval-every 100 --eval-mazes 10 --freeze 100 --out ";
  const int rc_a = run_cli(common + out_a.string() + " > /dev/null");
  const int rc_b = run_cli(common + out_b.string() + " > /dev/null");
  if (rc_a != 0 || rc_b != 0) return {false, "train invocation failed"};
  const std::string csv_a = slurp((out_a / "metrics.csv").string());
  const std::string csv_b = slurp((out_b / "metrics.csv").string());
  const bool ok = !csv_a.empty() && csv_a == csv_b;
  return {ok, "metrics CSVs " + std::to_string(csv_a.size()) + " bytes, byte-identical: " + (ok ? "yes" : "NO")};
}

}  // namespace

int main() {
  fs::create_directories(kWorkDir);
  const auto t_suite = Clock::now();

  run_criterion(1, "first-order autodiff vs finite differences", 60.0, false, criterion_first_order);
  run_criterion(2, "second-order matching-loss gradients vs finite differences", 120.0, false,
                criterion_second_order);
  run_criterion(3, "planner equivalence with exhaustive enumeration", 60.0, false, criterion_planner);
  run_criterion(4, "slope recursion vs fixed-path finite differences + literal-mode gap", 120.0, false,
                criterion_grad_recursion);
  run_criterion(5, "loss unit values", 0.0, false, criterion_loss_units);

  // shared small dataset for the baseline-identity check
  {
    const auto transitions = maze::collect_offpolicy(2000, 55);
    const ReplayBuffer small = ReplayBuffer::from_transitions(transitions);
    run_criterion(6, "alpha=0 training is bit-identical to the plain agent", 0.0, false,
                  [&] { return criterion_baseline_identity(small); });
  }

  run_criterion(7, "environment protocol and full-size dataset collection", 0.0, false, criterion_env_protocol);

  // the trend experiment and the determinism check share one 2e4 dataset
  const fs::path trend_data = kWorkDir / "offpolicy_2e4.gmasdata";
  {
    DatasetWriter writer(trend_data.string(), 20000);
    maze::collect_offpolicy(20000, 100, [&](const maze::Transition& t) { writer.append(t); });
    writer.close();
  }
  {
    const ReplayBuffer buffer = ReplayBuffer::load(trend_data.string());
    run_criterion(8, "scaled-down trend: gradient matching vs baseline (soft)", 0.0, true,
                  [&] { return criterion_trend(buffer); });
  }
  run_criterion(9, "byte-identical metrics under identical config and seed", 0.0, false,
                [&] { return criterion_determinism(trend_data.string()); });

  int hard_failures = 0;
  bool soft_failure = false;
  for (const Criterion& c : g_results) {
    if (!c.pass && !c.soft) ++hard_failures;
    if (!c.pass && c.soft) soft_failure = true;
  }
  const double total = std::chrono::duration<double>(Clock::now() - t_suite).count();
  std::printf("----\n%zu criteria, %d hard failure(s)%s, %.0fs total\n", g_results.size(), hard_failures,
              soft_failure ? ", soft trend criterion FAILED (reported, not masked)" : "", total);
  if (hard_failures == 0) fs::remove_all(kWorkDir);
  return hard_failures == 0 ? 0 : 1;
}
