// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0

#include "gmas/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gmas/checkpoint.hpp"
#include "gmas/optim.hpp"

namespace gmas {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void check_finite(double v, const char* component, std::int64_t iteration) {
  if (!std::isfinite(v))
    throw std::runtime_error("gmas: non-finite loss at iteration " + std::to_string(iteration) + " in component " +
                             component);
}

void validate(const RunConfig& cfg) {
  if (cfg.iterations <= 0 || cfg.batch_size <= 0 || cfg.freeze_interval <= 0 || cfg.eval_every <= 0 ||
      cfg.n_eval_mazes <= 0)
    throw std::invalid_argument("gmas: all iteration/batch/cadence counts must be positive");
  if (cfg.alpha < 0.0) throw std::invalid_argument("gmas: alpha must be >= 0");
  if (cfg.lr <= 0.0) throw std::invalid_argument("gmas: learning rate must be positive");
  if (cfg.train_depth < 0 || cfg.eval_depth < 0) throw std::invalid_argument("gmas: planning depths must be >= 0");
  if (cfg.gamma_prime && (*cfg.gamma_prime <= 0.0 || *cfg.gamma_prime > 1.0))
    throw std::invalid_argument("gmas: gamma_prime must lie in (0, 1]");
  if (cfg.denominator == PlanConfig::Denominator::kPaperLiteral &&
      (cfg.eval_depth == 0 || (cfg.alpha > 0.0 && cfg.train_depth == 0 && !cfg.gamma_prime)))
    throw std::invalid_argument("gmas: the literal plan denominator is undefined at depth 0");
  maze::validate(cfg.env);
}

// columns 0..B-1: batch states, B..2B-1: next states, 2B..3B-1: the
// independent states of the entropy pairs; one wide matrix so the encoder
// streams its weights once per iteration instead of three times
Tensor combined_obs_matrix(const ReplayBuffer& buffer, const BatchData& batch, std::span<const std::int64_t> s2) {
  const int b = static_cast<int>(batch.actions.size());
  const int d = buffer.obs_dim();
  Tensor m = Tensor::zeros({d, 3 * b});
  for (int k = 0; k < d; ++k) {
    double* row = m.data.data() + static_cast<std::size_t>(k) * 3 * b;
    for (int i = 0; i < b; ++i) {
      row[i] = batch.obs.data[static_cast<std::size_t>(k) * b + i];
      row[b + i] = batch.next_obs.data[static_cast<std::size_t>(k) * b + i];
    }
  }
  for (int i = 0; i < b; ++i) {
    const auto obs = buffer.obs(s2[static_cast<std::size_t>(i)]);
    for (int k = 0; k < d; ++k) m.data[static_cast<std::size_t>(k) * 3 * b + 2 * b + i] = obs[static_cast<std::size_t>(k)];
  }
  return m;
}

// column range [off, off+count) of a [m, n] graph tensor
Tensor col_range(Graph& g, const Tensor& matrix, int off, int count) {
  return g.transpose(g.slice(g.transpose(matrix), off, count));
}

}  // namespace

std::string metrics_csv_header() {
  return "iteration,loss_r,loss_g,loss_tau,loss_d1,loss_d2,loss_mf,loss_gmas,eval_mean,eval_std,seconds";
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::string line = std::to_string(r.iteration);
  for (double v : {r.loss_r, r.loss_g, r.loss_tau, r.loss_d1, r.loss_d2, r.loss_mf, r.loss_gmas, r.eval_mean,
                   r.eval_std, r.seconds})
    line += "," + fmt_double(v);
  return line;
}

PlanConfig plan_config_for_training(const RunConfig& cfg) {
  PlanConfig plan;
  plan.depth = cfg.train_depth;
  plan.branching = cfg.arch.n_actions;
  plan.denominator = cfg.denominator;
  plan.jacobian_mode = cfg.jacobian_mode;
  plan.gamma_prime = cfg.gamma_prime;
  return plan;
}

PlanConfig plan_config_for_eval(const RunConfig& cfg) {
  PlanConfig plan = plan_config_for_training(cfg);
  plan.depth = cfg.eval_depth;
  return plan;
}

maze::EvalResult evaluate(const AgentNets& nets, const PlanConfig& plan, int n_mazes, std::uint64_t seed,
                          const maze::EnvConfig& env) {
  const auto policy = [&](const maze::MazeState& state) {
    const maze::Observation obs = maze::render(state, env);
    const std::vector<double> x = encode(nets, obs.pixels);
    return act(x, plan, nets, QWhich::kLive);
  };
  return maze::evaluate_policy(policy, n_mazes, seed, env);
}

TrainResult train(const RunConfig& cfg, const ReplayBuffer& buffer) {
  validate(cfg);
  if (buffer.size() == 0) throw std::invalid_argument("gmas: training needs a non-empty dataset");

  AgentNets nets = AgentNets::init(cfg.arch, cfg.seed);
  Adam adam(AdamConfig{.lr = cfg.lr});
  Rng rng = Rng::derive(cfg.seed, 0x747261696eull);
  const std::uint64_t eval_seed = cfg.seed ^ 0x6576616cull;
  const PlanConfig plan_train = plan_config_for_training(cfg);
  const PlanConfig plan_eval = plan_config_for_eval(cfg);
  const std::vector<std::string> live = nets.live_names();

  TrainResult result;
  const auto t_start = std::chrono::steady_clock::now();

  MetricsRow acc;  // running sums between metric rows
  std::int64_t acc_count = 0;

  Graph g;
  for (std::int64_t iter = 1; iter <= cfg.iterations; ++iter) {
    const std::vector<std::int64_t> idx = buffer.sample_batch(cfg.batch_size, rng);
    const auto pairs = buffer.sample_state_pairs(idx, rng);
    std::vector<std::int64_t> s2_idx;
    s2_idx.reserve(pairs.size());
    for (const auto& pr : pairs) s2_idx.push_back(pr.second);

    const BatchData batch = make_batch(buffer, idx);

    g.reset();
    const BoundParams bound = bind_live(g, nets);
    const Tensor x_all = encode_g(g, bound, g.constant(combined_obs_matrix(buffer, batch, s2_idx)));
    const Tensor x = col_range(g, x_all, 0, cfg.batch_size);
    const Tensor x_next = col_range(g, x_all, cfg.batch_size, cfg.batch_size);
    const Tensor x_rand = col_range(g, x_all, 2 * cfg.batch_size, cfg.batch_size);

    const CrarLossNodes crar = loss_crar(g, bound, batch, x, x_next);
    const Tensor l_d1 = loss_entropy(g, x, x_rand, cfg.weights.c_d);
    const Tensor l_d2 = loss_linf(g, x);
    const std::vector<double> targets = ddqn_target(nets, batch, x_next.data);
    const ModelFreeLossNodes mf = loss_modelfree_total(g, bound, nets, batch, x, targets, plan_train, cfg.alpha,
                                                       cfg.dist);

    Tensor total = g.scale(crar.reward, cfg.weights.reward);
    total = g.add(total, g.scale(crar.discount, cfg.weights.discount));
    total = g.add(total, g.scale(crar.transition, cfg.weights.transition));
    total = g.add(total, g.scale(l_d1, cfg.weights.entropy));
    total = g.add(total, g.scale(l_d2, cfg.weights.linf));
    total = g.add(total, g.scale(mf.total, cfg.weights.modelfree));

    IterationStats stats;
    stats.iteration = iter;
    stats.loss_reward = crar.reward.item();
    stats.loss_discount = crar.discount.item();
    stats.loss_transition = crar.transition.item();
    stats.loss_entropy = l_d1.item();
    stats.loss_linf = l_d2.item();
    stats.loss_td = mf.td.item();
    stats.loss_gmas = mf.gmas.item();
    stats.total = total.item();
    stats.recorded_nodes = g.recorded_nodes();
    check_finite(stats.loss_reward, "loss_r", iter);
    check_finite(stats.loss_discount, "loss_g", iter);
    check_finite(stats.loss_transition, "loss_tau", iter);
    check_finite(stats.loss_entropy, "loss_d1", iter);
    check_finite(stats.loss_linf, "loss_d2", iter);
    check_finite(stats.loss_td, "loss_mf", iter);
    check_finite(stats.loss_gmas, "loss_gmas", iter);
    check_finite(stats.total, "total", iter);

    std::vector<Tensor> wrt;
    wrt.reserve(live.size());
    for (const std::string& name : live) wrt.push_back(bound(name));
    const std::vector<Tensor> grads = g.gradient(total, wrt);
    std::map<std::string, Tensor> grad_map;
    for (std::size_t i = 0; i < live.size(); ++i) grad_map.emplace(live[i], grads[i]);
    adam.step(nets.params, grad_map);

    if (iter % cfg.freeze_interval == 0) nets.sync_frozen();

    acc.loss_r += stats.loss_reward;
    acc.loss_g += stats.loss_discount;
    acc.loss_tau += stats.loss_transition;
    acc.loss_d1 += stats.loss_entropy;
    acc.loss_d2 += stats.loss_linf;
    acc.loss_mf += stats.loss_td;
    acc.loss_gmas += stats.loss_gmas;
    ++acc_count;

    if (cfg.on_iteration) cfg.on_iteration(stats, nets);

    if (iter % cfg.eval_every == 0) {
      const maze::EvalResult eval = evaluate(nets, plan_eval, cfg.n_eval_mazes, eval_seed, cfg.env);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      MetricsRow row;
      row.iteration = iter;
      row.loss_r = acc.loss_r / static_cast<double>(acc_count);
      row.loss_g = acc.loss_g / static_cast<double>(acc_count);
      row.loss_tau = acc.loss_tau / static_cast<double>(acc_count);
      row.loss_d1 = acc.loss_d1 / static_cast<double>(acc_count);
      row.loss_d2 = acc.loss_d2 / static_cast<double>(acc_count);
      row.loss_mf = acc.loss_mf / static_cast<double>(acc_count);
      row.loss_gmas = acc.loss_gmas / static_cast<double>(acc_count);
      row.eval_mean = eval.mean;
      row.eval_std = eval.stddev();
      row.seconds = cfg.wall_clock_in_metrics ? elapsed : 0.0;
      result.rows.push_back(row);
      acc = MetricsRow{};
      acc_count = 0;
      std::printf("[train] iter %lld  eval %.3f +- %.3f  (%.1fs elapsed)\n", static_cast<long long>(iter), eval.mean,
                  eval.stddev(), elapsed);
      std::fflush(stdout);
    }
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    result.metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
    std::ofstream csv(result.metrics_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("gmas: cannot write metrics to " + result.metrics_path);
    csv << metrics_csv_header() << "\n";
    for (const MetricsRow& row : result.rows) csv << metrics_csv_row(row) << "\n";
    csv.close();

    result.checkpoint_path = (std::filesystem::path(cfg.out_dir) / "checkpoint.gmasckpt").string();
    save_checkpoint(result.checkpoint_path, nets.params);
  }

  result.nets = std::move(nets);
  return result;
}

TrainResult train(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw std::invalid_argument("gmas: train needs a dataset path");
  const ReplayBuffer buffer = ReplayBuffer::load(cfg.data_path);
  return train(cfg, buffer);
}

}  // namespace gmas
