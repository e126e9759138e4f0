// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Offline training loop: every iteration samples one batch, assembles all
// representation and model-free losses on a single graph, takes one Adam
// step over the live parameters, and periodically syncs the frozen Q copy
// and evaluates on fresh mazes.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gmas/gradmatch.hpp"
#include "gmas/maze.hpp"
#include "gmas/nets.hpp"
#include "gmas/planner.hpp"
#include "gmas/replay.hpp"

namespace gmas {

struct LossWeights {
  double reward = 1.0;
  double discount = 1.0;
  double transition = 1.0;
  double entropy = 0.2;
  double linf = 1.0;
  double modelfree = 1.0;
  double c_d = 5.0;  // sharpness of the entropy term
};

struct IterationStats {
  std::int64_t iteration = 0;
  double loss_reward = 0.0;
  double loss_discount = 0.0;
  double loss_transition = 0.0;
  double loss_entropy = 0.0;
  double loss_linf = 0.0;
  double loss_td = 0.0;
  double loss_gmas = 0.0;
  double total = 0.0;
  std::size_t recorded_nodes = 0;  // second-order nodes built this iteration
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string data_path;
  std::int64_t iterations = 5000;
  int batch_size = 32;
  double lr = 1e-3;
  int freeze_interval = 1000;
  int train_depth = 1;  // planner depth for the slope targets
  int eval_depth = 0;   // planner depth when acting at evaluation
  double alpha = 0.05;  // 0 disables gradient matching entirely
  DistanceKind dist = DistanceKind::kCosine;
  PlanConfig::JacobianMode jacobian_mode = PlanConfig::JacobianMode::kResidual;
  PlanConfig::Denominator denominator = PlanConfig::Denominator::kDepthPlusOne;
  std::optional<double> gamma_prime;
  std::int64_t eval_every = 1000;
  int n_eval_mazes = 20;
  LossWeights weights;
  ArchConfig arch;
  maze::EnvConfig env;
  std::string out_dir;  // when set, metrics.csv and checkpoint.gmasckpt land here
  // The CSV seconds column stays at 0 unless this is set: identical configs
  // must produce byte-identical metrics files, and wall-clock time cannot.
  // Timing always goes to stdout regardless.
  bool wall_clock_in_metrics = false;
  // test hook, observed after each optimizer step
  std::function<void(const IterationStats&, const AgentNets&)> on_iteration;
};

struct MetricsRow {
  std::int64_t iteration = 0;
  double loss_r = 0.0;
  double loss_g = 0.0;
  double loss_tau = 0.0;
  double loss_d1 = 0.0;
  double loss_d2 = 0.0;
  double loss_mf = 0.0;
  double loss_gmas = 0.0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double seconds = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

struct TrainResult {
  AgentNets nets;
  std::vector<MetricsRow> rows;
  std::string metrics_path;     // empty when out_dir is unset
  std::string checkpoint_path;  // empty when out_dir is unset
};

PlanConfig plan_config_for_training(const RunConfig& cfg);
PlanConfig plan_config_for_eval(const RunConfig& cfg);

TrainResult train(const RunConfig& cfg, const ReplayBuffer& buffer);
TrainResult train(const RunConfig& cfg);  // loads cfg.data_path

maze::EvalResult evaluate(const AgentNets& nets, const PlanConfig& plan, int n_mazes, std::uint64_t seed,
                          const maze::EnvConfig& env = {});

}  // namespace gmas
