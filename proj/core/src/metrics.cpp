#include "nop/bench/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace nop::bench {

namespace {

Estimate bernoulli(std::size_t hits, std::size_t m) {
  if (m == 0) throw std::invalid_argument("success_rate: no episodes");
  const double p = static_cast<double>(hits) / static_cast<double>(m);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(m))};
}

Estimate sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("node_rate: no episodes");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double m = static_cast<double>(xs.size());
  const double mean = sum / m;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (m - 1.0) / m)};
}

double node_fraction(int visited, int interior) {
  if (interior <= 0) throw std::invalid_argument("node_rate: instance without interior nodes");
  return visited / (interior / 2.0);
}

}  // namespace

Estimate success_rate(std::span<const EpisodeTrace> traces) {
  std::size_t hits = 0;
  for (const auto& t : traces) hits += t.success() ? 1 : 0;
  return bernoulli(hits, traces.size());
}

Estimate success_rate(std::span<const TraceRecord> records) {
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.trace.success() ? 1 : 0;
  return bernoulli(hits, records.size());
}

Estimate node_rate(std::span<const EpisodeTrace> traces, std::span<const NopInstance> instances) {
  if (traces.size() != instances.size()) throw std::invalid_argument("node_rate: traces and instances differ in count");
  std::vector<double> xs;
  xs.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    xs.push_back(node_fraction(traces[i].reward.interior_visited, instances[i].interior_count()));
  }
  return sample_mean(xs);
}

Estimate node_rate(std::span<const TraceRecord> records) {
  std::vector<double> xs;
  xs.reserve(records.size());
  for (const auto& r : records) xs.push_back(node_fraction(r.trace.reward.interior_visited, r.interior_count));
  return sample_mean(xs);
}

MetricsRow summarize(const std::string& algorithm, std::span<const TraceRecord> records) {
  std::vector<TraceRecord> mine;
  for (const auto& r : records) {
    if (r.algorithm == algorithm) mine.push_back(r);
  }
  MetricsRow row;
  row.algorithm = algorithm;
  row.episodes = mine.size();
  row.success = success_rate(mine);
  row.node = node_rate(mine);
  for (const auto& r : mine) {
    row.mean_reward += r.trace.reward.total;
    row.mean_seconds += r.wall_seconds;
  }
  row.mean_reward /= static_cast<double>(mine.size());
  row.mean_seconds /= static_cast<double>(mine.size());
  return row;
}

}  // namespace nop::bench
