#pragma once

// A* against the Dijkstra oracle on random 50x50 grids.

#include <cmath>
#include <string>

#include "nop/baselines/astar.hpp"
#include "nop/generator.hpp"
#include "oracles/dijkstra.hpp"

namespace suites {

struct AStarStats {
  int grids = 0;
  int solved = 0;
  int cost_mismatches = 0;
  int infeasible_mismatches = 0;
  int blocked_cells = 0;      // path cells blocked on the grid
  int inflation_hits = 0;     // path cell centers inside an inflated disc
  int illegal_moves = 0;
  int polyline_collisions = 0;
  std::string first_error;

  bool ok() const {
    return cost_mismatches == 0 && infeasible_mismatches == 0 && blocked_cells == 0 && inflation_hits == 0 &&
           illegal_moves == 0 && polyline_collisions == 0;
  }
};

/// Even grids come from generated instances (obstacles inflated as the
/// planner does), odd grids are random 30% clutter.
inline AStarStats run_astar_suite(int count, std::uint64_t seed) {
  using namespace nop::baselines;
  AStarStats st;
  nop::GenConfig gen;
  gen.n_nodes = 10;
  gen.seed = seed;
  for (int k = 0; k < count; ++k) {
    nop::Rng rng(seed, static_cast<std::uint64_t>(k));
    const auto inst = nop::generate_instance(gen, static_cast<std::uint64_t>(k));
    const bool from_instance = k % 2 == 0;
    const double res = inst.step_len();
    const double infl = default_inflation(res, inst.step_len());
    GridSpec grid = from_instance ? make_grid(inst, res, infl) : GridSpec(50, 50, res);
    if (!from_instance) {
      for (int r = 0; r < 50; ++r) {
        for (int c = 0; c < 50; ++c) grid.set_blocked({r, c}, rng.uniform() < 0.3);
      }
    }
    Cell s{}, t{};
    do s = {rng.uniform_int(0, 49), rng.uniform_int(0, 49)}; while (grid.blocked(s));
    do t = {rng.uniform_int(0, 49), rng.uniform_int(0, 49)}; while (grid.blocked(t));
    ++st.grids;

    const auto a = astar_cells(grid, s, t);
    const auto d = oracle::dijkstra(grid, s, t);
    if (a.has_value() != d.has_value()) {
      ++st.infeasible_mismatches;
      if (st.first_error.empty()) st.first_error = "feasibility differs on grid " + std::to_string(k);
      continue;
    }
    if (!a) continue;
    ++st.solved;
    if (a->cost.straight != d->a || a->cost.diagonal != d->b) {
      ++st.cost_mismatches;
      if (st.first_error.empty()) st.first_error = "cost differs on grid " + std::to_string(k);
    }

    long straight = 0, diagonal = 0;
    if (!(a->cells.front() == s) || !(a->cells.back() == t)) ++st.illegal_moves;
    for (std::size_t i = 0; i < a->cells.size(); ++i) {
      const Cell c = a->cells[i];
      if (grid.blocked(c)) ++st.blocked_cells;
      if (from_instance) {
        for (const auto& o : inst.obstacles()) {
          if (nop::distance(grid.center(c), o.center) <= o.radius + infl) ++st.inflation_hits;
        }
      }
      if (i == 0) continue;
      const Cell p = a->cells[i - 1];
      const int dr = c.row - p.row, dc = c.col - p.col;
      if (std::abs(dr) > 1 || std::abs(dc) > 1 || (dr == 0 && dc == 0)) {
        ++st.illegal_moves;
        continue;
      }
      if (dr != 0 && dc != 0) {
        if (grid.blocked({p.row + dr, p.col}) || grid.blocked({p.row, p.col + dc})) ++st.illegal_moves;
        ++diagonal;
      } else {
        ++straight;
      }
    }
    if (straight != a->cost.straight || diagonal != a->cost.diagonal) ++st.illegal_moves;

    if (from_instance) {
      const auto pl = astar(grid, grid.center(s), grid.center(t), Anchor::Centers);
      if (!pl) {
        ++st.infeasible_mismatches;
        continue;
      }
      for (std::size_t i = 1; i < pl->path.size(); ++i) {
        if (nop::segment_hits_any(pl->path[i - 1], pl->path[i], inst.obstacles())) ++st.polyline_collisions;
      }
    }
  }
  return st;
}

}  // namespace suites
