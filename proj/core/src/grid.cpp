#include "nop/baselines/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace nop::baselines {

GridSpec::GridSpec(int rows, int cols, double resolution)
    : rows_(rows), cols_(cols), res_(resolution),
      blocked_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0) {
  if (rows < 1 || cols < 1 || !(resolution > 0.0)) throw std::invalid_argument("GridSpec: bad dimensions");
}

std::optional<Cell> GridSpec::cell_of(const Point& p) const {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= cols_ * res_ && p.y <= rows_ * res_)) return std::nullopt;
  Cell c{static_cast<int>(std::floor(p.y / res_)), static_cast<int>(std::floor(p.x / res_))};
  if (c.row >= rows_) c.row = rows_ - 1;
  if (c.col >= cols_) c.col = cols_ - 1;
  return c;
}

double default_inflation(double resolution, double step_len) {
  return resolution * std::sqrt(2.0) / 2.0 + step_len / 2.0;
}

GridSpec make_grid(const NopInstance& inst, double resolution, double inflation) {
  const int n = static_cast<int>(std::ceil(1.0 / resolution - 1e-9));
  GridSpec grid(n, n, resolution);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Point p = grid.center({r, c});
      for (const auto& o : inst.obstacles()) {
        if (distance(p, o.center) <= o.radius + inflation) {
          grid.set_blocked({r, c}, true);
          break;
        }
      }
    }
  }
  return grid;
}

GridSpec make_grid(const NopInstance& inst) {
  return make_grid(inst, inst.step_len(), default_inflation(inst.step_len(), inst.step_len()));
}

}  // namespace nop::baselines
