#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nop/geometry.hpp"
#include "nop/instance.hpp"

namespace nop::baselines {

struct Cell {
  int row = 0;  // y index
  int col = 0;  // x index

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Occupancy grid over [0,1]^2, cell (row, col) covering
/// [col*res, (col+1)*res) x [row*res, (row+1)*res).
class GridSpec {
 public:
  GridSpec(int rows, int cols, double resolution);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double resolution() const { return res_; }

  bool in_range(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
  void set_blocked(Cell c, bool b) { blocked_[index(c)] = b ? 1 : 0; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c.col); }

  Point center(Cell c) const { return {(c.col + 0.5) * res_, (c.row + 0.5) * res_}; }
  /// Cell containing p; points on the far edge of the square map to the
  /// last row/column. Empty when p is outside the grid.
  std::optional<Cell> cell_of(const Point& p) const;

  const std::vector<std::uint8_t>& occupancy() const { return blocked_; }

 private:
  int rows_;
  int cols_;
  double res_;
  std::vector<std::uint8_t> blocked_;
};

/// Default inflation: half a cell diagonal plus half a step.
double default_inflation(double resolution, double step_len);

/// Blocks every cell whose center lies within radius + inflation of an
/// obstacle center.
GridSpec make_grid(const NopInstance& inst, double resolution, double inflation);
GridSpec make_grid(const NopInstance& inst);

}  // namespace nop::baselines
