#include "nop/baselines/astar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <queue>

namespace nop::baselines {

double OctileCost::value() const { return static_cast<double>(straight) + static_cast<double>(diagonal) * std::sqrt(2.0); }

std::strong_ordering operator<=>(const OctileCost& a, const OctileCost& b) {
  // a - b = ds + dd*sqrt(2); compare its sign without rounding.
  const long ds = a.straight - b.straight;
  const long dd = a.diagonal - b.diagonal;
  auto sign = [](long v) { return (v > 0) - (v < 0); };
  int s;
  if (sign(ds) == 0 || sign(dd) == 0 || sign(ds) == sign(dd)) {
    s = sign(ds) != 0 ? sign(ds) : sign(dd);
  } else {
    // Opposite signs: compare ds^2 with 2 dd^2.
    const long lhs = ds * ds;
    const long rhs = 2 * dd * dd;
    s = lhs > rhs ? sign(ds) : sign(dd);
  }
  if (s < 0) return std::strong_ordering::less;
  if (s > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

OctileCost octile(Cell a, Cell b) {
  const long dr = std::labs(a.row - b.row);
  const long dc = std::labs(a.col - b.col);
  const long diag = std::min(dr, dc);
  return {std::max(dr, dc) - diag, diag};
}

std::vector<Cell> neighbours(const GridSpec& grid, Cell c) {
  std::vector<Cell> out;
  out.reserve(8);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const Cell nb{c.row + dr, c.col + dc};
      if (!grid.in_range(nb) || grid.blocked(nb)) continue;
      if (dr != 0 && dc != 0 && (grid.blocked({c.row + dr, c.col}) || grid.blocked({c.row, c.col + dc}))) continue;
      out.push_back(nb);
    }
  }
  return out;
}

std::optional<GridPath> astar_cells(const GridSpec& grid, Cell start, Cell goal) {
  if (!grid.in_range(start) || !grid.in_range(goal) || grid.blocked(start) || grid.blocked(goal)) {
    return std::nullopt;
  }
  const std::size_t N = static_cast<std::size_t>(grid.rows()) * static_cast<std::size_t>(grid.cols());
  std::vector<OctileCost> g(N);
  std::vector<std::uint8_t> reached(N, 0);
  std::vector<std::int64_t> parent(N, -1);
  std::vector<std::uint8_t> closed(N, 0);

  struct Item {
    OctileCost f;
    OctileCost g;
    std::size_t idx;
  };
  // Lowest f first; among equal f the deeper node, then the lower index.
  auto worse = [](const Item& a, const Item& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.idx > b.idx;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> open(worse);
  auto cell_at = [&](std::size_t i) {
    return Cell{static_cast<int>(i / static_cast<std::size_t>(grid.cols())),
                static_cast<int>(i % static_cast<std::size_t>(grid.cols()))};
  };

  const std::size_t s = grid.index(start), t = grid.index(goal);
  g[s] = {};
  reached[s] = 1;
  open.push({octile(start, goal), {}, s});
  while (!open.empty()) {
    const Item it = open.top();
    open.pop();
    if (closed[it.idx]) continue;
    closed[it.idx] = 1;
    if (it.idx == t) break;
    const Cell c = cell_at(it.idx);
    for (const Cell nb : neighbours(grid, c)) {
      const std::size_t j = grid.index(nb);
      if (closed[j]) continue;
      const bool diag = nb.row != c.row && nb.col != c.col;
      const OctileCost ng = it.g + (diag ? OctileCost{0, 1} : OctileCost{1, 0});
      if (!reached[j] || ng < g[j]) {
        reached[j] = 1;
        g[j] = ng;
        parent[j] = static_cast<std::int64_t>(it.idx);
        open.push({ng + octile(nb, goal), ng, j});
      }
    }
  }
  if (!closed[t]) return std::nullopt;
  GridPath out;
  out.cost = g[t];
  for (auto i = static_cast<std::int64_t>(t); i >= 0; i = parent[static_cast<std::size_t>(i)]) {
    out.cells.push_back(cell_at(static_cast<std::size_t>(i)));
  }
  std::reverse(out.cells.begin(), out.cells.end());
  return out;
}

std::optional<AStarResult> astar(const GridSpec& grid, const Point& start, const Point& goal, Anchor anchor) {
  const auto sc = grid.cell_of(start);
  const auto gc = grid.cell_of(goal);
  if (!sc || !gc) return std::nullopt;
  auto cells = astar_cells(grid, *sc, *gc);
  if (!cells) return std::nullopt;

  AStarResult out;
  out.cost = cells->cost;
  out.cells = std::move(cells->cells);
  out.path.push_back(start);
  const double res = grid.resolution();
  for (std::size_t i = 1; i < out.cells.size(); ++i) {
    if (anchor == Anchor::Start) {
      const Cell& c = out.cells[i];
      out.path.push_back({start.x + (c.col - sc->col) * res, start.y + (c.row - sc->row) * res});
    } else {
      out.path.push_back(grid.center(out.cells[i]));
    }
  }
  if (anchor == Anchor::Centers && out.cells.size() == 1) out.path.push_back(grid.center(out.cells[0]));
  if (anchor == Anchor::Start && out.path.size() > 1) {
    out.path.back() = goal;
  } else if (!(out.path.back() == goal)) {
    out.path.push_back(goal);
  }
  return out;
}

}  // namespace nop::baselines
