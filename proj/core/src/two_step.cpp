#include "nop/baselines/two_step.hpp"

#include "nop/baselines/astar.hpp"
#include "nop/baselines/grid.hpp"

namespace nop::baselines {

namespace {

std::optional<Polyline> stitch(const NopInstance& inst, const GridSpec& grid, const Route& route, Anchor anchor) {
  Polyline raw{inst.nodes()[static_cast<std::size_t>(route.front())]};
  for (std::size_t i = 1; i < route.size(); ++i) {
    const auto& a = inst.nodes()[static_cast<std::size_t>(route[i - 1])];
    const auto& b = inst.nodes()[static_cast<std::size_t>(route[i])];
    auto leg = astar(grid, a, b, anchor);
    if (!leg) return std::nullopt;
    raw.insert(raw.end(), leg->path.begin() + 1, leg->path.end());
  }
  return resample_polyline(raw, inst.step_len());
}

bool collides(const Polyline& path, const NopInstance& inst) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (segment_hits_any(path[i - 1], path[i], inst.obstacles())) return true;
  }
  return false;
}

// Anchored legs first; cell centers when the anchored copy grazes a disc.
std::optional<Polyline> stitch_safe(const NopInstance& inst, const GridSpec& grid, const Route& route) {
  auto path = stitch(inst, grid, route, Anchor::Start);
  if (path && !collides(*path, inst)) return path;
  return stitch(inst, grid, route, Anchor::Centers);
}

// Cells reachable from `from` under the planner's move rules.
std::vector<std::uint8_t> reachable(const GridSpec& grid, Cell from) {
  std::vector<std::uint8_t> seen(grid.occupancy().size(), 0);
  std::vector<Cell> stack{from};
  seen[grid.index(from)] = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (const Cell nb : neighbours(grid, c)) {
      if (!seen[grid.index(nb)]) {
        seen[grid.index(nb)] = 1;
        stack.push_back(nb);
      }
    }
  }
  return seen;
}

}  // namespace

TwoStepResult two_step_plan(const NopInstance& inst, const TwoStepConfig& cfg) {
  TwoStepResult out;
  const double res = cfg.resolution > 0.0 ? cfg.resolution : inst.step_len();
  const GridSpec grid = make_grid(inst, res, default_inflation(res, inst.step_len()));
  auto blocked = [&](int i) {
    const auto c = grid.cell_of(inst.nodes()[static_cast<std::size_t>(i)]);
    return !c || grid.blocked(*c);
  };
  if (blocked(0) || blocked(inst.end_index())) {
    out.reason = "depot lies in an inflated obstacle cell";
    return out;
  }
  const auto from_start = reachable(grid, *grid.cell_of(inst.nodes()[0]));
  auto cut_off = [&](int i) { return !from_start[grid.index(*grid.cell_of(inst.nodes()[static_cast<std::size_t>(i)]))]; };
  if (cut_off(inst.end_index())) {
    out.reason = "no grid path between the depots";
    return out;
  }
  std::vector<std::uint8_t> excluded(static_cast<std::size_t>(inst.size()), 0);
  for (int i = 1; i < inst.end_index(); ++i) {
    if (!inst.is_dummy(i) && (blocked(i) || cut_off(i))) {
      excluded[static_cast<std::size_t>(i)] = 1;
      out.excluded.push_back(i);
    }
  }

  const auto dist = euclidean_distances(inst);
  auto route = greedy_route(inst, dist, inst.budget() - cfg.epsilon, excluded);
  if (!route) route = Route{0, inst.end_index()};  // slack exceeds the direct distance

  for (;;) {
    auto path = stitch_safe(inst, grid, *route);
    if (!path) {
      out.reason = "no grid path between waypoints";
      return out;
    }
    const auto steps = static_cast<int>(path->size()) - 1;
    if (steps > inst.max_steps() && route->size() > 2) {
      route->erase(route->end() - 2);
      ++out.dropped;
      continue;
    }
    out.feasible = true;
    out.route = std::move(*route);
    out.path = std::move(*path);
    if (steps > inst.max_steps()) out.reason = "depot-to-depot path exceeds the step budget";
    return out;
  }
}

}  // namespace nop::baselines
