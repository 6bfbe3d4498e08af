#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nop/instance.hpp"

namespace nop {

struct GenConfig {
  int n_nodes = 20;
  int obstacles_min = 5;
  int obstacles_max = 20;
  double radius_min = 0.02;
  double radius_max = 0.12;
  double budget = 2.0;
  double step_len = 0.02;
  std::uint64_t seed = 0;
  /// Node placement attempts before giving up on an instance.
  int max_resamples = 10000;

  void validate() const;
};

/// Budget paired with each published scenario size: 20 -> 2, 50 -> 3,
/// 100 -> 4. Other sizes interpolate linearly between those anchors.
double default_budget(int n_nodes);

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws instance `index` of the stream keyed by cfg.seed. Obstacles are
/// drawn first; nodes landing in a closed disc are resampled. Reals are
/// quantized to 9 significant digits so the text form round-trips.
NopInstance generate_instance(const GenConfig& cfg, std::uint64_t index = 0);

std::vector<NopInstance> generate_instances(const GenConfig& cfg, std::size_t count,
                                            std::uint64_t first_index = 0);

struct DatasetSummary {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string sha256;
};

/// Writes `count` instances, one per line, in index order.
DatasetSummary generate_dataset(const GenConfig& cfg, std::size_t count, const std::string& path);

}  // namespace nop
