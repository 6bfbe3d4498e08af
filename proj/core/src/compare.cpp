#include "nop/bench/compare.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nop/bench/svg_plot.hpp"
#include "nop/parallel.hpp"

namespace nop::bench {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::vector<TraceRecord> evaluate_policy(const train::Policy& model, const std::vector<NopInstance>& instances,
                                         const std::string& label, model::DecodeMode mode, std::uint64_t seed,
                                         const EnvConfig& env, const RewardConfig& reward) {
  std::vector<TraceRecord> out(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    const auto& inst = instances[i];
    const auto t0 = Clock::now();
    Rng rng(seed, i);
    const auto g = model.encode(inst);
    Episode ep(inst, env, reward);
    while (!ep.done()) {
      const auto s = model.act(ep.state(), inst, g, mode, rng);
      ep.step(s.goal, s.direction, s.goal_log_probs[static_cast<std::size_t>(s.goal)],
              s.direction_log_probs[static_cast<std::size_t>(s.direction)]);
    }
    auto& rec = out[i];
    rec.trace = ep.finish();
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.algorithm = label;
    rec.instance_index = i;
    rec.interior_count = inst.interior_count();
    rec.obstacle_count = static_cast<int>(inst.obstacles().size());
  });
  return out;
}

std::vector<TraceRecord> evaluate_two_step(const std::vector<NopInstance>& instances, const std::string& label,
                                           const baselines::TwoStepConfig& cfg, const EnvConfig& env,
                                           const RewardConfig& reward) {
  std::vector<TraceRecord> out(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    const auto& inst = instances[i];
    const auto t0 = Clock::now();
    const auto plan = baselines::two_step_plan(inst, cfg);
    auto& rec = out[i];
    if (plan.feasible) {
      rec.trace = replay_path(inst, plan.route, plan.path, env, reward);
    } else {
      // Nothing to execute: the agent never leaves the start depot.
      Episode ep(inst, env, reward);
      auto t = ep.trace();
      t.outcome = Outcome::TimeoutFail;
      t.reward = combine_reward(0.0, 0.0, 0, false, inst.interior_count(), reward);
      rec.trace = std::move(t);
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.algorithm = label;
    rec.instance_index = i;
    rec.interior_count = inst.interior_count();
    rec.obstacle_count = static_cast<int>(inst.obstacles().size());
  });
  return out;
}

AlgorithmSpec AlgorithmSpec::parse(const std::string& text) {
  AlgorithmSpec spec;
  std::string body = text;
  std::string rename;
  if (text.rfind("external:", 0) == 0) {
    body = text.substr(9);
    const auto eq = body.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == body.size()) {
      throw std::invalid_argument("external algorithm needs external:<label>=<traces.jsonl>: " + text);
    }
    spec.kind = Kind::External;
    spec.label = body.substr(0, eq);
    spec.path = body.substr(eq + 1);
    return spec;
  }
  if (const auto at = body.rfind('@'); at != std::string::npos) {
    rename = body.substr(at + 1);
    body = body.substr(0, at);
  }
  if (body == "two-step-greedy-astar") {
    spec.kind = Kind::TwoStepGreedyAStar;
    spec.label = body;
  } else if (body.rfind("naviformer=", 0) == 0 && body.size() > 11) {
    spec.kind = Kind::NaviFormer;
    spec.label = "naviformer";
    spec.path = body.substr(11);
  } else {
    throw std::invalid_argument("unknown algorithm '" + text +
                                "' (expected naviformer=<checkpoint>, two-step-greedy-astar or "
                                "external:<label>=<file>)");
  }
  if (!rename.empty()) spec.label = rename;
  return spec;
}

CompareReport report_from_records(std::vector<TraceRecord> records) {
  CompareReport rep;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) order.push_back(r.algorithm);
  }
  for (const auto& name : order) {
    rep.rows.push_back(summarize(name, records));
    std::map<int, std::vector<TraceRecord>> by_count;
    for (const auto& r : records) {
      if (r.algorithm == name) by_count[r.obstacle_count].push_back(r);
    }
    for (const auto& [count, recs] : by_count) {
      BreakdownRow b;
      b.algorithm = name;
      b.obstacle_count = count;
      b.episodes = recs.size();
      b.success = success_rate(recs);
      b.node = node_rate(recs);
      rep.breakdown.push_back(b);
    }
  }
  rep.records = std::move(records);
  return rep;
}

std::string CompareReport::table_csv() const {
  std::ostringstream o;
  o << "algorithm,episodes,success_rate,success_stderr,node_rate,node_stderr,mean_reward\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.episodes, r.success.mean, r.success.stderr_,
                  r.node.mean, r.node.stderr_, r.mean_reward);
    o << r.algorithm << buf;
  }
  return o.str();
}

std::string CompareReport::timing_csv() const {
  std::ostringstream o;
  o << "algorithm,episodes,mean_seconds_per_instance\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%zu,%.6f\n", r.episodes, r.mean_seconds);
    o << r.algorithm << buf;
  }
  return o.str();
}

std::string CompareReport::breakdown_csv() const {
  std::ostringstream o;
  o << "algorithm,obstacles,episodes,success_rate,success_stderr,node_rate,node_stderr\n";
  char buf[256];
  for (const auto& b : breakdown) {
    std::snprintf(buf, sizeof buf, ",%d,%zu,%.6f,%.6f,%.6f,%.6f\n", b.obstacle_count, b.episodes, b.success.mean,
                  b.success.stderr_, b.node.mean, b.node.stderr_);
    o << b.algorithm << buf;
  }
  return o.str();
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

void write_report(const CompareReport& report, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "traces");
  write_text(dir / "table.csv", report.table_csv());
  write_text(dir / "timing.csv", report.timing_csv());
  write_text(dir / "breakdown.csv", report.breakdown_csv());

  std::vector<Series> success, nodes;
  for (const auto& row : report.rows) {
    Series s{row.algorithm, {}}, n{row.algorithm, {}};
    for (const auto& b : report.breakdown) {
      if (b.algorithm != row.algorithm) continue;
      s.points.emplace_back(b.obstacle_count, b.success.mean);
      n.points.emplace_back(b.obstacle_count, b.node.mean);
    }
    success.push_back(std::move(s));
    nodes.push_back(std::move(n));

    std::vector<TraceRecord> mine;
    for (const auto& r : report.records) {
      if (r.algorithm == row.algorithm) mine.push_back(r);
    }
    write_traces((dir / "traces" / (row.algorithm + ".jsonl")).string(), mine);
  }
  write_text(dir / "success_vs_obstacles.svg",
             line_chart_svg({"Success rate by obstacle count", "obstacles", "success rate", 0.0, 1.0}, success));
  write_text(dir / "node_rate_vs_obstacles.svg",
             line_chart_svg({"Node rate by obstacle count", "obstacles", "node rate", 0.0, 1.0}, nodes));
}

CompareReport compare(const CompareConfig& cfg) {
  if (cfg.algorithms.empty()) throw std::invalid_argument("compare: no algorithms given");
  const auto instances = load_instances(cfg.dataset);
  if (instances.empty()) throw std::invalid_argument("compare: dataset " + cfg.dataset + " is empty");

  std::vector<TraceRecord> all;
  std::set<std::string> used;
  for (const auto& spec : cfg.algorithms) {
    std::string label = spec.label;
    for (int k = 2; used.count(label); ++k) label = spec.label + "-" + std::to_string(k);
    used.insert(label);

    std::vector<TraceRecord> recs;
    switch (spec.kind) {
      case AlgorithmSpec::Kind::NaviFormer: {
        if (!fs::exists(spec.path)) throw std::runtime_error("compare: checkpoint not found: " + spec.path);
        const auto model = train::load_policy(spec.path);
        recs = evaluate_policy(model, instances, label, cfg.mode, cfg.seed);
        break;
      }
      case AlgorithmSpec::Kind::TwoStepGreedyAStar:
        recs = evaluate_two_step(instances, label, cfg.two_step);
        break;
      case AlgorithmSpec::Kind::External: {
        if (!fs::exists(spec.path)) throw std::runtime_error("compare: trace file not found: " + spec.path);
        recs = read_traces(spec.path);
        if (recs.size() != instances.size()) {
          throw SchemaError("compare: " + spec.path + " has " + std::to_string(recs.size()) + " records for " +
                            std::to_string(instances.size()) + " instances");
        }
        for (std::size_t i = 0; i < recs.size(); ++i) {
          if (recs[i].instance_index != i) throw SchemaError("compare: " + spec.path + " is not in instance order");
          recs[i].algorithm = label;
        }
        break;
      }
    }
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  auto report = report_from_records(std::move(all));
  if (!cfg.out_dir.empty()) write_report(report, cfg.out_dir);
  return report;
}

}  // namespace nop::bench
