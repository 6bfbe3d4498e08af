#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nop/baselines/two_step.hpp"
#include "nop/bench/metrics.hpp"
#include "nop/train/trainer.hpp"

namespace nop::bench {

/// Policy rollouts, one record per instance. Wall time covers encoding and
/// the episode only.
std::vector<TraceRecord> evaluate_policy(const train::Policy& model, const std::vector<NopInstance>& instances,
                                         const std::string& label, model::DecodeMode mode, std::uint64_t seed,
                                         const EnvConfig& env = {}, const RewardConfig& reward = {});

/// Two-step plans replayed through the environment. Wall time covers
/// planning and replay. Infeasible plans become zero-step failures.
std::vector<TraceRecord> evaluate_two_step(const std::vector<NopInstance>& instances, const std::string& label,
                                           const baselines::TwoStepConfig& cfg = {}, const EnvConfig& env = {},
                                           const RewardConfig& reward = {});

struct AlgorithmSpec {
  enum class Kind { NaviFormer, TwoStepGreedyAStar, External };
  Kind kind = Kind::TwoStepGreedyAStar;
  std::string label;
  std::string path;  // checkpoint or trace file

  /// Accepts "naviformer=<checkpoint>", "two-step-greedy-astar" and
  /// "external:<label>=<traces.jsonl>"; an optional "@<label>" suffix
  /// renames the first two.
  static AlgorithmSpec parse(const std::string& text);
};

struct CompareConfig {
  std::vector<AlgorithmSpec> algorithms;
  std::string dataset;
  std::string out_dir;  // empty: nothing written
  std::uint64_t seed = 0;
  model::DecodeMode mode = model::DecodeMode::Greedy;
  baselines::TwoStepConfig two_step{};
};

struct BreakdownRow {
  std::string algorithm;
  int obstacle_count = 0;
  std::size_t episodes = 0;
  Estimate success;
  Estimate node;
};

struct CompareReport {
  std::vector<MetricsRow> rows;
  std::vector<BreakdownRow> breakdown;
  std::vector<TraceRecord> records;

  /// Metrics without timing; identical for identical traces.
  std::string table_csv() const;
  std::string timing_csv() const;
  std::string breakdown_csv() const;
};

/// Recomputes every metric from records, algorithms in first-seen order.
CompareReport report_from_records(std::vector<TraceRecord> records);

/// Runs every algorithm over the dataset. With an output directory it
/// writes table.csv, timing.csv, breakdown.csv, traces/<label>.jsonl and
/// success_vs_obstacles.svg / node_rate_vs_obstacles.svg.
CompareReport compare(const CompareConfig& cfg);

void write_report(const CompareReport& report, const std::string& out_dir);

}  // namespace nop::bench
