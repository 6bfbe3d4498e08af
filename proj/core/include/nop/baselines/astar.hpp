#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "nop/baselines/grid.hpp"

namespace nop::baselines {

/// Path cost straight + diagonal * sqrt(2), compared exactly.
struct OctileCost {
  long straight = 0;
  long diagonal = 0;

  double value() const;
  OctileCost operator+(const OctileCost& o) const { return {straight + o.straight, diagonal + o.diagonal}; }
  friend bool operator==(const OctileCost&, const OctileCost&) = default;
  friend std::strong_ordering operator<=>(const OctileCost& a, const OctileCost& b);
};

/// Octile distance between two cells.
OctileCost octile(Cell a, Cell b);

/// Moves allowed from `c`: the 8 neighbours inside the grid and free, with
/// diagonals requiring both adjacent orthogonal cells free.
std::vector<Cell> neighbours(const GridSpec& grid, Cell c);

struct GridPath {
  std::vector<Cell> cells;
  OctileCost cost;
};

/// Optimal 8-connected cell path. Empty when start or goal is blocked or
/// no path exists.
std::optional<GridPath> astar_cells(const GridSpec& grid, Cell start, Cell goal);

struct AStarResult {
  std::vector<Cell> cells;
  OctileCost cost;
  /// start, the intermediate waypoints, goal. Not resampled.
  Polyline path;
};

/// How cell paths become polylines.
enum class Anchor {
  /// Cell moves applied as offsets from `start`, last point snapped to
  /// `goal`. Exact lengths on open ground, but the offset can bring the path
  /// closer to obstacles than the inflation covers.
  Start,
  /// start, every cell center, goal. Stays within half a cell diagonal of
  /// free cell centers.
  Centers,
};

/// Plans between two points. Empty when either point is off-grid or in a
/// blocked cell, or no path exists.
std::optional<AStarResult> astar(const GridSpec& grid, const Point& start, const Point& goal,
                                 Anchor anchor = Anchor::Start);

}  // namespace nop::baselines
