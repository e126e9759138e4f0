// Copyright (c) 2026 the gmaslab authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: collect off-policy maze data, train the agent,
// evaluate checkpoints, emit plot scripts, and run the self-verification
// oracle suite.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include "gmas/checkpoint.hpp"
#include "gmas/dataset.hpp"
#include "gmas/train.hpp"
#include "gmas/verify.hpp"

namespace {

int run_collect(std::int64_t n, std::uint64_t seed, const std::string& out, const gmas::maze::EnvConfig& env) {
  gmas::DatasetWriter writer(out, static_cast<std::uint64_t>(n));
  std::int64_t written = 0;
  gmas::maze::collect_offpolicy(
      n, seed,
      [&](const gmas::maze::Transition& t) {
        writer.append(t);
        if (++written % 20000 == 0)
          std::printf("[collect] %lld / %lld transitions\n", static_cast<long long>(written),
                      static_cast<long long>(n));
      },
      env);
  writer.close();
  std::printf("[collect] wrote %lld transitions to %s\n", static_cast<long long>(n), out.c_str());
  return 0;
}

int run_eval(const std::string& ckpt, int depth, int mazes, std::uint64_t seed, const gmas::maze::EnvConfig& env) {
  const gmas::AgentNets nets = gmas::AgentNets::from_params(gmas::load_checkpoint(ckpt));
  gmas::PlanConfig plan;
  plan.depth = depth;
  plan.branching = nets.arch.n_actions;
  const gmas::maze::EvalResult result = gmas::evaluate(nets, plan, mazes, seed, env);
  std::printf("mean score %.4f +- %.4f over %d mazes (planning depth %d)\n", result.mean, result.stddev(), mazes,
              depth);
  return 0;
}

int run_plot(const std::string& metrics, const std::string& out) {
  {
    std::ifstream check(metrics);
    if (!check) throw std::runtime_error("gmas: cannot open metrics file: " + metrics);
  }
  std::ofstream py(out, std::ios::trunc);
  if (!py) throw std::runtime_error("gmas: cannot write plot script: " + out);
  py << "#!/usr/bin/env python3\n"
        "\"\"\"Render training curves from a gmaslab metrics CSV.\"\"\"\n"
        "import csv\n"
        "import sys\n"
        "\n"
        "import matplotlib\n"
        "matplotlib.use(\"Agg\")\n"
        "import matplotlib.pyplot as plt\n"
        "\n"
        "path = sys.argv[1] if len(sys.argv) > 1 else \""
     << metrics
     << "\"\n"
        "rows = list(csv.DictReader(open(path)))\n"
        "it = [int(r[\"iteration\"]) for r in rows]\n"
        "fig, (ax_loss, ax_eval) = plt.subplots(1, 2, figsize=(11, 4))\n"
        "for key in [\"loss_r\", \"loss_g\", \"loss_tau\", \"loss_d1\", \"loss_d2\", \"loss_mf\", \"loss_gmas\"]:\n"
        "    ax_loss.plot(it, [float(r[key]) for r in rows], label=key)\n"
        "ax_loss.set_xlabel(\"iteration\")\n"
        "ax_loss.set_ylabel(\"loss (running mean)\")\n"
        "ax_loss.set_yscale(\"symlog\", linthresh=1e-4)\n"
        "ax_loss.legend(fontsize=7)\n"
        "mean = [float(r[\"eval_mean\"]) for r in rows]\n"
        "std = [float(r[\"eval_std\"]) for r in rows]\n"
        "ax_eval.plot(it, mean, marker=\"o\")\n"
        "ax_eval.fill_between(it, [m - s for m, s in zip(mean, std)], [m + s for m, s in zip(mean, std)], alpha=0.2)\n"
        "ax_eval.set_xlabel(\"iteration\")\n"
        "ax_eval.set_ylabel(\"mean evaluation score\")\n"
        "ax_eval.set_ylim(-5.2, 1.2)\n"
        "fig.tight_layout()\n"
        "out = path.rsplit(\".\", 1)[0] + \".png\"\n"
        "fig.savefig(out, dpi=150)\n"
        "print(f\"wrote {out}\")\n";
  std::printf("[plot] wrote %s (run it with python3 to render a PNG)\n", out.c_str());
  return 0;
}

int run_verify(std::uint64_t seed, bool thorough) {
  const auto results = gmas::run_verification(seed, !thorough);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %s -- %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmaslab: maze-task RL agent with abstract-space planning and gradient matching"};
  app.require_subcommand(1);

  gmas::maze::EnvConfig env;

  auto* collect = app.add_subcommand("collect", "Collect uniform-random off-policy transitions into a GMASDATA file");
  std::int64_t collect_n = 100000;
  std::uint64_t collect_seed = 1;
  std::string collect_out = "data.gmasdata";
  collect->add_option("--n", collect_n, "Number of transitions")->check(CLI::PositiveNumber);
  collect->add_option("--seed", collect_seed, "Collection seed");
  collect->add_option("--out", collect_out, "Output path")->required();

  auto* tr = app.add_subcommand("train", "Train on a fixed off-policy dataset");
  gmas::RunConfig cfg;
  std::string dist_kind = "cosine";
  std::string jacobian = "residual";
  std::string denominator = "mean";
  std::string timing = "none";
  double gamma_prime = -1.0;
  tr->add_option("--seed", cfg.seed, "Run seed");
  tr->add_option("--data", cfg.data_path, "GMASDATA dataset path")->required();
  tr->add_option("--iters", cfg.iterations, "Training iterations")->check(CLI::PositiveNumber);
  tr->add_option("--batch", cfg.batch_size, "Batch size")->check(CLI::PositiveNumber);
  tr->add_option("--lr", cfg.lr, "Adam learning rate");
  tr->add_option("--alpha", cfg.alpha, "Gradient-matching weight (0 = plain agent)");
  tr->add_option("--dist", dist_kind, "Slope distance: cosine or l2")->check(CLI::IsMember({"cosine", "l2"}));
  tr->add_option("--train-depth", cfg.train_depth, "Planner depth for slope targets");
  tr->add_option("--eval-depth", cfg.eval_depth, "Planner depth when acting at evaluation");
  tr->add_option("--jacobian", jacobian, "Transition Jacobian mode: residual or paper")
      ->check(CLI::IsMember({"residual", "paper"}));
  tr->add_option("--denominator", denominator, "Plan average denominator: mean (D+1) or paper (D)")
      ->check(CLI::IsMember({"mean", "paper"}));
  tr->add_option("--gamma-prime", gamma_prime, "Depth discount for slope targets, in (0, 1]");
  tr->add_option("--freeze", cfg.freeze_interval, "Frozen-Q sync interval")->check(CLI::PositiveNumber);
  tr->add_option("--eval-every", cfg.eval_every, "Evaluation cadence in iterations")->check(CLI::PositiveNumber);
  tr->add_option("--eval-mazes", cfg.n_eval_mazes, "Mazes per evaluation")->check(CLI::PositiveNumber);
  tr->add_option("--out", cfg.out_dir, "Output directory for metrics.csv and checkpoint.gmasckpt")->required();
  tr->add_option("--w-reward", cfg.weights.reward, "Reward loss weight");
  tr->add_option("--w-discount", cfg.weights.discount, "Discount loss weight");
  tr->add_option("--w-transition", cfg.weights.transition, "Transition loss weight");
  tr->add_option("--w-entropy", cfg.weights.entropy, "Entropy loss weight");
  tr->add_option("--w-linf", cfg.weights.linf, "L-infinity ball loss weight");
  tr->add_option("--w-modelfree", cfg.weights.modelfree, "Model-free loss weight");
  tr->add_option("--c-d", cfg.weights.c_d, "Entropy loss sharpness");
  tr->add_option("--timing", timing, "seconds column: none (deterministic CSV) or wall")
      ->check(CLI::IsMember({"none", "wall"}));

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on fresh mazes");
  std::string ckpt;
  int eval_depth = 0, eval_mazes = 50;
  std::uint64_t eval_seed = 1;
  ev->add_option("--ckpt", ckpt, "GMASCKPT checkpoint path")->required();
  ev->add_option("--depth", eval_depth, "Planning depth");
  ev->add_option("--mazes", eval_mazes, "Number of evaluation mazes")->check(CLI::PositiveNumber);
  ev->add_option("--seed", eval_seed, "Evaluation seed");

  auto* pl = app.add_subcommand("plot", "Emit a python plot script for a metrics CSV");
  std::string metrics_in, plot_out = "plot_metrics.py";
  pl->add_option("--metrics", metrics_in, "metrics.csv produced by train")->required();
  pl->add_option("--out", plot_out, "Plot script output path");

  auto* vf = app.add_subcommand("verify", "Run the finite-difference and enumeration oracle suites");
  std::uint64_t verify_seed = 12345;
  bool thorough = false;
  vf->add_option("--seed", verify_seed, "Oracle seed");
  vf->add_flag("--thorough", thorough, "Acceptance-sized trial counts (slower)");

  for (auto* sub : {collect, tr, ev}) {
    sub->add_option("--maze-width", env.width, "Maze grid width including borders");
    sub->add_option("--maze-height", env.height, "Maze grid height including borders");
    sub->add_option("--gamma-env", env.gamma_env, "Environment discount for non-terminal steps");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*collect) return run_collect(collect_n, collect_seed, collect_out, env);
    if (*tr) {
      cfg.env = env;
      cfg.dist = dist_kind == "l2" ? gmas::DistanceKind::kL2 : gmas::DistanceKind::kCosine;
      cfg.jacobian_mode = jacobian == "paper" ? gmas::PlanConfig::JacobianMode::kPaperLiteral
                                              : gmas::PlanConfig::JacobianMode::kResidual;
      cfg.denominator = denominator == "paper" ? gmas::PlanConfig::Denominator::kPaperLiteral
                                               : gmas::PlanConfig::Denominator::kDepthPlusOne;
      if (gamma_prime > 0.0) cfg.gamma_prime = gamma_prime;
      cfg.wall_clock_in_metrics = timing == "wall";
      const gmas::TrainResult result = gmas::train(cfg);
      std::printf("[train] metrics: %s\n[train] checkpoint: %s\n", result.metrics_path.c_str(),
                  result.checkpoint_path.c_str());
      return 0;
    }
    if (*ev) return run_eval(ckpt, eval_depth, eval_mazes, eval_seed, env);
    if (*pl) return run_plot(metrics_in, plot_out);
    if (*vf) return run_verify(verify_seed, thorough);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
