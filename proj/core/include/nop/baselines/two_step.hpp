#pragma once

#include <string>
#include <vector>

#include "nop/baselines/route.hpp"
#include "nop/geometry.hpp"

namespace nop::baselines {

struct TwoStepConfig {
  double epsilon = 0.3;
  /// Grid cell size; 0 means the instance step length.
  double resolution = 0.0;
};

struct TwoStepResult {
  bool feasible = false;
  Route route;
  /// Resampled at the instance step length.
  Polyline path;
  /// Interior nodes in blocked cells or cut off from the start, never routed.
  std::vector<int> excluded;
  /// Trailing nodes removed to fit the step budget.
  int dropped = 0;
  std::string reason;
};

/// Greedy route under budget T - epsilon followed by A* legs between
/// consecutive waypoints. While the stitched path needs more than L steps
/// the last interior node is dropped. A path that still exceeds L with no
/// interior nodes left is returned as is, so the budget violation shows up
/// in verification.
TwoStepResult two_step_plan(const NopInstance& inst, const TwoStepConfig& cfg = {});

}  // namespace nop::baselines
