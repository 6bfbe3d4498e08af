#include "nop/trace_io.hpp"

#include <fstream>
#include "json.hpp"

namespace nop {

using ojson = nlohmann::ordered_json;

std::string trace_to_json(const TraceRecord& rec) {
  const auto& t = rec.trace;
  ojson j;
  j["schema"] = kTraceSchema;
  j["algorithm"] = rec.algorithm;
  j["instance"] = rec.instance_index;
  j["interior_count"] = rec.interior_count;
  j["obstacle_count"] = rec.obstacle_count;
  j["wall_seconds"] = rec.wall_seconds;
  j["outcome"] = std::string(outcome_name(t.outcome));
  j["visit_order"] = t.visit_order;
  ojson pos = ojson::array();
  for (const auto& p : t.positions) pos.push_back({p.x, p.y});
  j["positions"] = std::move(pos);
  ojson steps = ojson::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"goal", s.goal}, {"dir", s.direction}, {"logp_goal", s.logp_goal},
                     {"logp_dir", s.logp_direction}});
  }
  j["steps"] = std::move(steps);
  const auto& r = t.reward;
  j["reward"] = {{"total", r.total},       {"prize", r.prize},
                 {"distance_sum", r.distance_sum}, {"prize_term", r.prize_term},
                 {"distance_term", r.distance_term}, {"terminal", r.terminal},
                 {"interior_visited", r.interior_visited}};
  return j.dump();
}

TraceRecord trace_from_json(const std::string& line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    throw SchemaError(std::string("trace line is not valid JSON: ") + e.what());
  }
  if (!j.contains("schema") || j["schema"] != kTraceSchema) {
    throw SchemaError(std::string("trace schema mismatch: expected ") + kTraceSchema);
  }
  try {
    TraceRecord rec;
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.instance_index = j.at("instance").get<std::size_t>();
    rec.interior_count = j.at("interior_count").get<int>();
    rec.obstacle_count = j.value("obstacle_count", 0);
    rec.wall_seconds = j.value("wall_seconds", 0.0);
    auto& t = rec.trace;
    t.outcome = outcome_from_name(j.at("outcome").get<std::string>());
    t.visit_order = j.at("visit_order").get<std::vector<int>>();
    for (const auto& p : j.at("positions")) t.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    const auto& steps = j.at("steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      StepRecord s;
      s.goal = steps[k].at("goal").get<int>();
      s.direction = steps[k].at("dir").get<int>();
      s.logp_goal = steps[k].value("logp_goal", 0.0);
      s.logp_direction = steps[k].value("logp_dir", 0.0);
      if (k < t.positions.size()) s.from = t.positions[k];
      if (k + 1 < t.positions.size()) s.to = t.positions[k + 1];
      t.steps.push_back(s);
    }
    if (j.contains("reward")) {
      const auto& r = j["reward"];
      t.reward.total = r.value("total", 0.0);
      t.reward.prize = r.value("prize", 0.0);
      t.reward.distance_sum = r.value("distance_sum", 0.0);
      t.reward.prize_term = r.value("prize_term", 0.0);
      t.reward.distance_term = r.value("distance_term", 0.0);
      t.reward.terminal = r.value("terminal", 0.0);
      t.reward.interior_visited = r.value("interior_visited", 0);
    }
    return rec;
  } catch (const ojson::exception& e) {
    throw SchemaError(std::string("trace line has wrong fields: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

void write_traces(const std::string& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace file " + path);
  for (const auto& r : records) out << trace_to_json(r) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<TraceRecord> read_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(trace_from_json(line));
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace nop
