#include "nop/instance.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>

namespace nop {
namespace {

void format_real(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

}  // namespace

int steps_for_budget(double budget, double step_len) {
  return static_cast<int>(std::floor(budget / step_len + 1e-9));
}

NopInstance::NopInstance(std::vector<Point> nodes, std::vector<double> rewards,
                         std::vector<Obstacle> obstacles, double budget, double step_len,
                         std::vector<std::uint8_t> dummy)
    : nodes_(std::move(nodes)),
      rewards_(std::move(rewards)),
      obstacles_(std::move(obstacles)),
      budget_(budget),
      step_len_(step_len),
      max_steps_(0),
      dummy_(std::move(dummy)) {
  if (nodes_.size() < 2) throw StructuralError("instance needs at least the two depots");
  if (rewards_.size() != nodes_.size()) throw StructuralError("rewards and nodes differ in length");
  if (!dummy_.empty() && dummy_.size() != nodes_.size()) {
    throw StructuralError("dummy mask and nodes differ in length");
  }
  if (!(budget_ > 0.0) || !(step_len_ > 0.0)) {
    throw StructuralError("budget_T and step_len must be positive");
  }
  if (rewards_.front() != 0.0 || rewards_.back() != 0.0) {
    throw StructuralError("depots must carry zero reward");
  }
  for (double r : rewards_) {
    if (!(r >= 0.0)) throw StructuralError("rewards must be non-negative");
  }
  for (const auto& o : obstacles_) {
    if (!(o.radius > 0.0)) throw StructuralError("obstacle radius must be positive");
    if (!std::isfinite(o.center.x) || !std::isfinite(o.center.y)) {
      throw StructuralError("obstacle center must be finite");
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!inside_unit_square(nodes_[i])) throw StructuralError("node outside [0,1]^2");
    if (is_dummy(static_cast<int>(i))) continue;
    for (const auto& o : obstacles_) {
      if (distance(nodes_[i], o.center) < o.radius) {
        throw StructuralError("node " + std::to_string(i) + " lies inside an obstacle");
      }
    }
  }
  if (!dummy_.empty() && (dummy_.front() != 0 || dummy_.back() != 0)) {
    throw StructuralError("depots cannot be dummies");
  }
  max_steps_ = steps_for_budget(budget_, step_len_);
}

int NopInstance::interior_count() const {
  int count = 0;
  for (int i = 1; i < end_index(); ++i) count += is_dummy(i) ? 0 : 1;
  return count;
}

NopInstance make_instance(std::vector<Point> nodes, std::vector<Obstacle> obstacles,
                          double budget, double step_len) {
  std::vector<double> rewards(nodes.size(), 1.0);
  if (!rewards.empty()) {
    rewards.front() = 0.0;
    rewards.back() = 0.0;
  }
  return NopInstance(std::move(nodes), std::move(rewards), std::move(obstacles), budget, step_len);
}

NopInstance pad_with_dummies(const NopInstance& inst, int n_slots) {
  const int n = inst.interior_slots();
  if (n_slots < n) throw std::invalid_argument("pad_with_dummies: target smaller than instance");
  std::vector<Point> nodes(inst.nodes().begin(), inst.nodes().end() - 1);
  std::vector<double> rewards(inst.rewards().begin(), inst.rewards().end() - 1);
  std::vector<std::uint8_t> dummy(nodes.size(), 0);
  for (int i = 0; i < n; ++i) dummy[static_cast<std::size_t>(i + 1)] = inst.is_dummy(i + 1);
  for (int i = n; i < n_slots; ++i) {
    nodes.push_back(inst.nodes().front());
    rewards.push_back(0.0);
    dummy.push_back(1);
  }
  nodes.push_back(inst.nodes().back());
  rewards.push_back(0.0);
  dummy.push_back(0);
  return NopInstance(std::move(nodes), std::move(rewards), inst.obstacles(), inst.budget(),
                     inst.step_len(), std::move(dummy));
}

double quantize9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

std::string serialize_instance(const NopInstance& inst) {
  std::string out;
  out.reserve(64 + 48 * inst.nodes().size());
  out += "{\"nodes\":[";
  for (std::size_t i = 0; i < inst.nodes().size(); ++i) {
    if (i) out += ',';
    out += '[';
    format_real(out, inst.nodes()[i].x);
    out += ',';
    format_real(out, inst.nodes()[i].y);
    out += ']';
  }
  out += "],\"rewards\":[";
  for (std::size_t i = 0; i < inst.rewards().size(); ++i) {
    if (i) out += ',';
    format_real(out, inst.rewards()[i]);
  }
  out += "],\"obstacles\":[";
  for (std::size_t i = 0; i < inst.obstacles().size(); ++i) {
    const auto& o = inst.obstacles()[i];
    if (i) out += ',';
    out += '[';
    format_real(out, o.center.x);
    out += ',';
    format_real(out, o.center.y);
    out += ',';
    format_real(out, o.radius);
    out += ']';
  }
  out += "],\"budget_T\":";
  format_real(out, inst.budget());
  out += ",\"step_len\":";
  format_real(out, inst.step_len());
  if (!inst.dummy().empty()) {
    out += ",\"dummy\":[";
    for (std::size_t i = 0; i < inst.dummy().size(); ++i) {
      if (i) out += ',';
      out += inst.dummy()[i] ? '1' : '0';
    }
    out += ']';
  }
  out += '}';
  return out;
}

NopInstance parse_instance(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw StructuralError(std::string("instance line is not valid JSON: ") + e.what());
  }
  try {
    std::vector<Point> nodes;
    for (const auto& p : j.at("nodes")) nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    auto rewards = j.at("rewards").get<std::vector<double>>();
    std::vector<Obstacle> obstacles;
    for (const auto& o : j.at("obstacles")) {
      obstacles.push_back({{o.at(0).get<double>(), o.at(1).get<double>()}, o.at(2).get<double>()});
    }
    std::vector<std::uint8_t> dummy;
    if (j.contains("dummy")) dummy = j.at("dummy").get<std::vector<std::uint8_t>>();
    return NopInstance(std::move(nodes), std::move(rewards), std::move(obstacles),
                       j.at("budget_T").get<double>(), j.at("step_len").get<double>(),
                       std::move(dummy));
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("instance line has wrong schema: ") + e.what());
  }
}

std::vector<NopInstance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  std::vector<NopInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_instance(line));
    } catch (const StructuralError& e) {
      throw StructuralError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_instances(const std::vector<NopInstance>& instances, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path);
  for (const auto& inst : instances) out << serialize_instance(inst) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace nop
