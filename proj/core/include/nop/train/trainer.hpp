#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nop/env.hpp"
#include "nop/generator.hpp"
#include "nop/autodiff/optim.hpp"
#include "nop/model/naviformer.hpp"

namespace nop::train {

using Policy = model::NaviFormer<float>;

struct TrainConfig {
  int batch = 128;
  int iterations = 2000;
  double lr = 1e-4;
  double entropy_weight = 0.0;
  double critic_weight = 0.5;
  double max_grad_norm = 1.0;
  bool normalize_advantage = false;
  std::uint64_t seed = 1;
  /// Write a checkpoint every this many iterations (0 disables periodic ones).
  int checkpoint_every = 100;
  /// Pad instances to this many interior slots with dummy nodes (0 = off).
  int pad_to = 0;
  /// Gradients are summed into this many fixed partitions of the batch, so
  /// results do not depend on the number of worker threads.
  int grad_shards = 8;
  GenConfig gen{};
  model::ModelConfig model{};
  EnvConfig env{};
  RewardConfig reward{};
  std::string out_dir;  // empty: no files written

  void validate() const;
};

/// Reduced model and scenario for single-core runs: n = 10, 3-6
/// obstacles, T = 2, batch 128, 2000 iterations, learning rate 1e-3.
TrainConfig desk_config();

struct IterationRecord {
  int iteration = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double node_rate = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double grad_norm = 0.0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<IterationRecord> records;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

/// Raised when a loss or gradient turns non-finite. A diagnostic dump is
/// written to the output directory first when one is configured.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rollout {
  EpisodeTrace trace;
  double value = 0.0;  // critic estimate for the instance
};

/// Runs one episode per instance without recording gradients. Episode i
/// draws its actions from Rng(seed, i).
std::vector<Rollout> rollout_batch(const Policy& model, const std::vector<NopInstance>& instances,
                                   model::DecodeMode mode, std::uint64_t seed, const EnvConfig& env = {},
                                   const RewardConfig& reward = {});

/// Re-evaluates the recorded actions of a finished trace on the active
/// tape: log-probability of the whole action sequence, mean per-step
/// entropy and critic value.
template <typename T>
struct ActionEvaluation {
  ad::Tensor<T> log_prob;
  ad::Tensor<T> mean_entropy;
  ad::Tensor<T> value;
};

template <typename T>
ActionEvaluation<T> evaluate_actions(const model::NaviFormer<T>& model, const NopInstance& inst,
                                     const EpisodeTrace& trace, const EnvConfig& env = {});

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double grad_norm = 0.0;
  std::vector<double> advantages;
};

/// Actor-critic update over finished traces. The actor term weights the
/// log-probability of each episode's action sequence by the constant
/// advantage r - V; the critic regresses V onto r with squared error. One optimizer
/// step is applied. Throws std::invalid_argument for an empty batch.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  Policy& model() { return *model_; }
  const TrainConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }

  /// Samples a fresh batch, updates the model and returns the record.
  IterationRecord run_iteration();

  /// Update from already finished traces (replayed under a tape).
  UpdateStats update(const std::vector<NopInstance>& instances, const std::vector<EpisodeTrace>& traces);

  /// Training batch for a given iteration.
  std::vector<NopInstance> batch_instances(int iteration) const;

  void save(const std::string& path) const;

 private:
  void sync_replicas();
  void apply_gradients(UpdateStats& stats);
  void dump_diagnostics(const std::string& reason, const std::vector<double>& rewards,
                        const std::vector<double>& values) const;

  TrainConfig cfg_;
  std::unique_ptr<Policy> model_;
  std::vector<std::unique_ptr<Policy>> replicas_;
  std::unique_ptr<ad::Adam<float>> optim_;
  int iteration_ = 0;
};

/// Full training run: writes checkpoint_<iter>.nopckpt at the configured
/// cadence (iteration 0 included), model.nopckpt and report.csv at the end.
TrainReport train(const TrainConfig& cfg,
                  const std::function<void(const IterationRecord&)>& on_iteration = {});

/// Model rebuilt from a checkpoint's manifest and weights.
Policy load_policy(const std::string& path);

}  // namespace nop::train
