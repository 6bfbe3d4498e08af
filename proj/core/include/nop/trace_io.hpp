#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nop/env.hpp"

namespace nop {

inline constexpr const char* kTraceSchema = "nop-trace/1";

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One evaluated episode as exchanged between planners, the comparison
/// harness and the plot emitter.
struct TraceRecord {
  std::string algorithm;
  std::size_t instance_index = 0;
  /// Non-padding interior nodes of the instance; the node-rate divisor is
  /// half of this.
  int interior_count = 0;
  int obstacle_count = 0;
  double wall_seconds = 0.0;
  EpisodeTrace trace;
};

/// One JSON object per line; reals are written in shortest round-trip form.
std::string trace_to_json(const TraceRecord& rec);
TraceRecord trace_from_json(const std::string& line);

void write_traces(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_traces(const std::string& path);

}  // namespace nop
