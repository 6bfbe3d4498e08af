#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nop/geometry.hpp"

namespace nop {

/// Thrown when an instance or route is structurally malformed (as opposed
/// to feasible-but-violating, which the verifier reports).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One Navigation Orienteering Problem scenario. Node 0 is the start
/// depot, node n+1 the end depot, nodes 1..n are prize-carrying regions.
///
/// Immutable after construction; the constructor enforces the invariants.
class NopInstance {
 public:
  NopInstance(std::vector<Point> nodes, std::vector<double> rewards,
              std::vector<Obstacle> obstacles, double budget, double step_len,
              std::vector<std::uint8_t> dummy = {});

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  double budget() const { return budget_; }
  double step_len() const { return step_len_; }
  int max_steps() const { return max_steps_; }

  /// Padding nodes that never carry reward and are masked from the start.
  /// Empty when the instance has no padding.
  const std::vector<std::uint8_t>& dummy() const { return dummy_; }
  bool is_dummy(int i) const { return !dummy_.empty() && dummy_[static_cast<std::size_t>(i)] != 0; }

  /// Total node count, n + 2.
  int size() const { return static_cast<int>(nodes_.size()); }
  /// Interior node slots, n (dummies included).
  int interior_slots() const { return size() - 2; }
  /// Interior nodes that are not padding.
  int interior_count() const;
  int start_index() const { return 0; }
  int end_index() const { return size() - 1; }
  bool is_depot(int i) const { return i == 0 || i == end_index(); }

  friend bool operator==(const NopInstance&, const NopInstance&) = default;

 private:
  std::vector<Point> nodes_;
  std::vector<double> rewards_;
  std::vector<Obstacle> obstacles_;
  double budget_;
  double step_len_;
  int max_steps_;
  std::vector<std::uint8_t> dummy_;
};

/// floor(budget / step_len), tolerant of representation error in the
/// quotient (2 / 0.02 must give 100).
int steps_for_budget(double budget, double step_len);

/// Instance with unit rewards on interior nodes and zero on depots.
NopInstance make_instance(std::vector<Point> nodes, std::vector<Obstacle> obstacles,
                          double budget, double step_len);

/// Pads `inst` with dummy interior nodes (placed on the start depot, zero
/// reward) until it has `n_slots` interior slots.
NopInstance pad_with_dummies(const NopInstance& inst, int n_slots);

/// Rounds to 9 significant digits, the precision of the text format.
double quantize9(double v);

/// One-line text form with keys nodes, rewards, obstacles, budget_T,
/// step_len (in that order; a trailing `dummy` key only when padded).
std::string serialize_instance(const NopInstance& inst);
NopInstance parse_instance(const std::string& line);

std::vector<NopInstance> load_instances(const std::string& path);
void save_instances(const std::vector<NopInstance>& instances, const std::string& path);

}  // namespace nop
