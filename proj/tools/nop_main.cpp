#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nop/baselines/two_step.hpp"
#include "nop/bench/compare.hpp"
#include "nop/generator.hpp"
#include "nop/parallel.hpp"
#include "nop/train/trainer.hpp"
#include "nop/verify.hpp"

namespace {

using namespace nop;

struct GenArgs {
  int n = 20;
  double budget = 0.0;  // 0: paired default for n
  int obstacles_min = 5;
  int obstacles_max = 20;
  double radius_min = 0.02;
  double radius_max = 0.12;
  double step_len = 0.02;

  void add_to(CLI::App* app) {
    app->add_option("--n", n, "Interior nodes per instance")->check(CLI::PositiveNumber);
    app->add_option("--budget", budget, "Budget T (default: 2/3/4 for n = 20/50/100, interpolated)");
    app->add_option("--obstacles-min", obstacles_min, "Fewest obstacles");
    app->add_option("--obstacles-max", obstacles_max, "Most obstacles");
    app->add_option("--radius-min", radius_min, "Smallest obstacle radius");
    app->add_option("--radius-max", radius_max, "Largest obstacle radius");
    app->add_option("--step-len", step_len, "Step length t_s");
  }

  GenConfig config(std::uint64_t seed) const {
    GenConfig g;
    g.n_nodes = n;
    g.budget = budget > 0.0 ? budget : default_budget(n);
    g.obstacles_min = obstacles_min;
    g.obstacles_max = obstacles_max;
    g.radius_min = radius_min;
    g.radius_max = radius_max;
    g.step_len = step_len;
    g.seed = seed;
    return g;
  }
};

void print_row(const bench::MetricsRow& r) {
  std::printf("%-24s episodes=%zu success=%.3f+-%.3f node_rate=%.3f+-%.3f reward=%.3f time=%.4fs\n",
              r.algorithm.c_str(), r.episodes, r.success.mean, r.success.stderr_, r.node.mean, r.node.stderr_,
              r.mean_reward, r.mean_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navigation orienteering: instance generation, training, planning and evaluation"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Write a dataset of random instances (JSON lines)");
  GenArgs gen_args;
  gen_args.add_to(gen);
  std::size_t count = 100;
  std::string gen_out;
  gen->add_option("--count", count, "Number of instances");
  gen->add_option("--out", gen_out, "Output file")->required();
  gen->add_option("--seed", seed, "Random seed");

  // train
  auto* tr = app.add_subcommand("train", "Train a policy with actor-critic");
  train::TrainConfig tcfg = train::desk_config();
  GenArgs tr_gen;
  tr_gen.n = tcfg.gen.n_nodes;
  tr_gen.obstacles_min = tcfg.gen.obstacles_min;
  tr_gen.obstacles_max = tcfg.gen.obstacles_max;
  bool full_model = false;
  tr_gen.add_to(tr);
  tr->add_option("--batch", tcfg.batch, "Episodes per iteration")->capture_default_str();
  tr->add_option("--iters", tcfg.iterations, "Iterations")->capture_default_str();
  tr->add_option("--lr", tcfg.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--entropy", tcfg.entropy_weight, "Entropy bonus weight")->capture_default_str();
  tr->add_option("--critic-weight", tcfg.critic_weight, "Critic loss weight")->capture_default_str();
  tr->add_flag("--normalize-advantage", tcfg.normalize_advantage, "Standardize advantages per batch");
  tr->add_option("--checkpoint-every", tcfg.checkpoint_every, "Checkpoint cadence in iterations")->capture_default_str();
  tr->add_option("--pad-to", tcfg.pad_to, "Pad instances with dummy nodes to this many interior slots");
  tr->add_option("--out-dir", tcfg.out_dir, "Directory for checkpoints and report.csv")->required();
  tr->add_flag("--full-model", full_model, "Full-size network (hidden 128, 8 heads, 3 blocks, 32x32 maps)");
  tr->add_option("--seed", seed, "Random seed");

  // eval
  auto* ev = app.add_subcommand("eval", "Roll out a trained policy on a dataset");
  std::string ev_ckpt, ev_data, ev_out;
  bool ev_sample = false;
  ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--instances", ev_data, "Dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Write traces (JSON lines) here");
  ev->add_flag("--sample", ev_sample, "Sample actions instead of greedy decoding");
  ev->add_option("--seed", seed, "Random seed");

  // plan
  auto* pl = app.add_subcommand("plan", "Plan every instance of a file and write traces");
  std::string pl_algo = "two-step-greedy-astar", pl_data, pl_out, pl_ckpt;
  double epsilon = 0.3;
  pl->add_option("--algo", pl_algo, "naviformer or two-step-greedy-astar")
      ->check(CLI::IsMember({"naviformer", "two-step-greedy-astar"}))
      ->capture_default_str();
  pl->add_option("--instance-file", pl_data, "Dataset file")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", pl_out, "Output traces (JSON lines)")->required();
  pl->add_option("--checkpoint", pl_ckpt, "Model checkpoint (naviformer)");
  pl->add_option("--epsilon", epsilon, "Budget slack for the two-step planner")->capture_default_str();
  pl->add_option("--seed", seed, "Random seed");

  // compare
  auto* cmp = app.add_subcommand("compare", "Evaluate several algorithms and write tables and plots");
  bench::CompareConfig ccfg;
  std::vector<std::string> algos;
  cmp->add_option("--dataset", ccfg.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--algo", algos,
                  "naviformer=<checkpoint>, two-step-greedy-astar or external:<label>=<traces.jsonl>; repeatable")
      ->required();
  cmp->add_option("--out-dir", ccfg.out_dir, "Output directory")->required();
  cmp->add_option("--epsilon", ccfg.two_step.epsilon, "Budget slack for the two-step planner")->capture_default_str();
  cmp->add_option("--seed", seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto summary = generate_dataset(gen_args.config(seed), count, gen_out);
      std::printf("wrote %zu instances to %s (seed %llu, sha256 %s)\n", summary.count, gen_out.c_str(),
                  static_cast<unsigned long long>(summary.seed), summary.sha256.c_str());
    } else if (*tr) {
      tcfg.seed = seed;
      tcfg.gen = tr_gen.config(seed);
      if (full_model) tcfg.model = model::ModelConfig{};
      std::printf("training: n=%d obstacles %d-%d batch=%d iterations=%d workers=%zu\n", tcfg.gen.n_nodes,
                  tcfg.gen.obstacles_min, tcfg.gen.obstacles_max, tcfg.batch, tcfg.iterations, worker_count());
      const int last = tcfg.iterations - 1;
      train::train(tcfg, [last](const train::IterationRecord& rec) {
        if (rec.iteration % 10 == 0 || rec.iteration == last) {
          std::printf("iter %5d reward %8.3f success %.3f node_rate %.3f actor %.4f critic %.3f (%.2fs)\n",
                      rec.iteration, rec.mean_reward, rec.success_rate, rec.node_rate, rec.actor_loss,
                      rec.critic_loss, rec.wall_seconds);
          std::fflush(stdout);
        }
      });
      const auto dir = std::filesystem::path(tcfg.out_dir);
      std::printf("saved %s\n", (dir / "model.nopckpt").c_str());
    } else if (*ev) {
      const auto model = train::load_policy(ev_ckpt);
      const auto instances = load_instances(ev_data);
      const auto mode = ev_sample ? model::DecodeMode::Sample : model::DecodeMode::Greedy;
      auto recs = bench::evaluate_policy(model, instances, "naviformer", mode, seed);
      print_row(bench::summarize("naviformer", recs));
      if (!ev_out.empty()) write_traces(ev_out, recs);
    } else if (*pl) {
      const auto instances = load_instances(pl_data);
      std::vector<TraceRecord> recs;
      if (pl_algo == "naviformer") {
        if (pl_ckpt.empty()) throw CLI::ValidationError("--checkpoint", "required for --algo naviformer");
        const auto model = train::load_policy(pl_ckpt);
        recs = bench::evaluate_policy(model, instances, pl_algo, model::DecodeMode::Greedy, seed);
      } else {
        baselines::TwoStepConfig cfg;
        cfg.epsilon = epsilon;
        recs = bench::evaluate_two_step(instances, pl_algo, cfg);
      }
      write_traces(pl_out, recs);
      print_row(bench::summarize(pl_algo, recs));
    } else if (*cmp) {
      ccfg.seed = seed;
      for (const auto& a : algos) ccfg.algorithms.push_back(bench::AlgorithmSpec::parse(a));
      const auto report = bench::compare(ccfg);
      for (const auto& row : report.rows) print_row(row);
      std::printf("tables and plots written to %s\n", ccfg.out_dir.c_str());
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
