#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nop/geometry.hpp"
#include "nop/instance.hpp"

namespace nop {

using Route = std::vector<int>;

/// The eight constraints of the NOP formulation, numbered as in the model.
enum class Constraint {
  StartAtDepot = 0,   // leaves node 0 exactly once
  EndAtDepot,         // enters node n+1 exactly once, last
  SingleEntry,        // interior nodes entered at most once
  SingleExit,         // interior nodes left at most once
  NoImmediateRevisit, // no i -> i transitions
  Budget,             // path fits in L steps of length t_s
  CollisionFree,      // path stays in [0,1]^2 and outside every disc
  NoSubtour,          // successor chain from 0 reaches every routed node
};
inline constexpr std::size_t kConstraintCount = 8;

std::string_view constraint_name(Constraint c);

struct VerificationReport {
  std::array<bool, kConstraintCount> passed{};
  /// The path passes within the visit radius of each routed node in
  /// route order.
  bool path_follows_route = false;
  double prize = 0.0;
  double path_length = 0.0;
  int path_steps = 0;
  /// Straight-line depot distance; the budget lower bound is informational.
  double lower_bound = 0.0;
  bool lower_bound_met = false;

  bool ok(Constraint c) const { return passed[static_cast<std::size_t>(c)]; }
  bool all_pass() const;
  std::vector<std::string> failures() const;
};

/// Checks a (route, path) pair against every constraint. Nodes count as
/// reached when a path segment passes within `visit_radius` (default:
/// the instance step length).
///
/// Throws StructuralError when the route or path is malformed (empty,
/// or a node index out of range).
VerificationReport verify_solution(const NopInstance& inst, const Route& route,
                                   const Polyline& path,
                                   std::optional<double> visit_radius = std::nullopt);

}  // namespace nop
