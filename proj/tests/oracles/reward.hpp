#pragma once

// Episode return recomputed from first principles: node prizes from the
// visit list, per-step pre-move distances to the active goal, terminal term.

#include <set>

#include "nop/env.hpp"

namespace oracle {

inline double episode_return(const nop::EpisodeTrace& t, const nop::NopInstance& inst, double gamma = 10.0,
                             double beta = 0.3, double bonus = 20.0, double penalty = -10.0) {
  double prize = 0.0;
  std::set<int> seen;
  for (int v : t.visit_order) {
    if (v == 0 || v == inst.size() - 1 || !seen.insert(v).second) continue;
    prize += inst.rewards()[static_cast<std::size_t>(v)];
  }
  double dist = 0.0;
  for (const auto& s : t.steps) {
    const auto& g = inst.nodes()[static_cast<std::size_t>(s.goal)];
    dist += std::hypot(s.from.x - g.x, s.from.y - g.y);
  }
  const double half = inst.interior_count() / 2.0;
  return gamma * prize / half - beta * dist + (t.outcome == nop::Outcome::Success ? bonus : penalty);
}

}  // namespace oracle
