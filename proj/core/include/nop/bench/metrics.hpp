#pragma once

#include <span>
#include <string>
#include <vector>

#include "nop/env.hpp"
#include "nop/instance.hpp"
#include "nop/trace_io.hpp"

namespace nop::bench {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Fraction of successful episodes; stderr sqrt(p(1-p)/m). Throws
/// std::invalid_argument on an empty set.
Estimate success_rate(std::span<const EpisodeTrace> traces);
Estimate success_rate(std::span<const TraceRecord> records);

/// Mean over episodes of interior nodes visited / (n/2), with the standard
/// error of that mean. Node rates above 1 are possible.
Estimate node_rate(std::span<const EpisodeTrace> traces, std::span<const NopInstance> instances);
Estimate node_rate(std::span<const TraceRecord> records);

struct MetricsRow {
  std::string algorithm;
  std::size_t episodes = 0;
  Estimate success;
  Estimate node;
  double mean_reward = 0.0;
  double mean_seconds = 0.0;
};

/// Per-algorithm row from exported records; records of other algorithms
/// are ignored.
MetricsRow summarize(const std::string& algorithm, std::span<const TraceRecord> records);

}  // namespace nop::bench
