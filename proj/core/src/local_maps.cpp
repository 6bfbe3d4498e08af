#include "nop/local_maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nop {

GridView LocalMaps::half(const std::vector<std::uint8_t>& grid, int size, Half h) {
  const int m = size / 2;
  switch (h) {
    case Half::North: return {grid.data(), m, size, size};
    case Half::South: return {grid.data() + m * size, size - m, size, size};
    case Half::West: return {grid.data(), size, m, size};
    case Half::East: return {grid.data() + m, size, size - m, size};
  }
  return {};
}

template <typename T>
void LocalMaps::fill_channels(std::span<T> out) const {
  const std::size_t plane = static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
  if (out.size() != kChannels * plane) throw std::invalid_argument("fill_channels: wrong buffer size");
  std::fill(out.begin(), out.end(), T(0));
  const int m = size / 2;
  const std::vector<std::uint8_t>* grids[2] = {&obstacle, &goal};
  for (int g = 0; g < 2; ++g) {
    const auto& src = *grids[g];
    T* full = out.data() + static_cast<std::size_t>(g) * plane;
    T* halves = out.data() + static_cast<std::size_t>(2 + 4 * g) * plane;
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r * size + c);
        const T v = static_cast<T>(src[idx]);
        full[idx] = v;
        if (r < m) halves[0 * plane + idx] = v;   // north
        if (c >= m) halves[1 * plane + idx] = v;  // east
        if (r >= m) halves[2 * plane + idx] = v;  // south
        if (c < m) halves[3 * plane + idx] = v;   // west
      }
    }
  }
}

template void LocalMaps::fill_channels<float>(std::span<float>) const;
template void LocalMaps::fill_channels<double>(std::span<double>) const;

std::pair<int, int> local_cell(double dx, double dy, const LocalMapConfig& cfg) {
  const int n = cfg.size;
  const int col = static_cast<int>(std::floor((dx / cfg.window + 0.5) * n));
  const int row = static_cast<int>(std::floor((0.5 - dy / cfg.window) * n));
  return {std::clamp(row, 0, n - 1), std::clamp(col, 0, n - 1)};
}

LocalMaps rasterize_local_maps(const Point& position, const NopInstance& inst, int goal,
                               const LocalMapConfig& cfg) {
  if (cfg.size < 2 || !(cfg.window > 0.0)) throw std::invalid_argument("invalid local map config");
  if (goal < 0 || goal >= inst.size()) throw std::out_of_range("goal index out of range");
  const int n = cfg.size;
  LocalMaps maps;
  maps.size = n;
  maps.obstacle.assign(static_cast<std::size_t>(n * n), 0);
  maps.goal.assign(static_cast<std::size_t>(n * n), 0);

  const double half = cfg.window / 2.0;
  const double cell = cfg.window / n;
  auto cell_offset_x = [&](int c) { return ((c + 0.5) / n - 0.5) * cfg.window; };
  auto cell_offset_y = [&](int r) { return (0.5 - (r + 0.5) / n) * cfg.window; };

  for (const auto& o : inst.obstacles()) {
    const double ox = o.center.x - position.x;
    const double oy = o.center.y - position.y;
    if (std::abs(ox) > half + o.radius + cell || std::abs(oy) > half + o.radius + cell) continue;
    const int c0 = std::max(0, static_cast<int>(std::floor(((ox - o.radius) / cfg.window + 0.5) * n)) - 1);
    const int c1 = std::min(n - 1, static_cast<int>(std::floor(((ox + o.radius) / cfg.window + 0.5) * n)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor((0.5 - (oy + o.radius) / cfg.window) * n)) - 1);
    const int r1 = std::min(n - 1, static_cast<int>(std::floor((0.5 - (oy - o.radius) / cfg.window) * n)) + 1);
    const double r2 = o.radius * o.radius;
    for (int r = r0; r <= r1; ++r) {
      const double dy = cell_offset_y(r) - oy;
      for (int c = c0; c <= c1; ++c) {
        const double dx = cell_offset_x(c) - ox;
        if (dx * dx + dy * dy <= r2) maps.obstacle[static_cast<std::size_t>(r * n + c)] = 1;
      }
    }
  }

  if (cfg.mark_out_of_bounds) {
    for (int r = 0; r < n; ++r) {
      const double y = position.y + cell_offset_y(r);
      for (int c = 0; c < n; ++c) {
        const double x = position.x + cell_offset_x(c);
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) maps.obstacle[static_cast<std::size_t>(r * n + c)] = 1;
      }
    }
  }

  const Point g = inst.nodes()[static_cast<std::size_t>(goal)];
  double dx = g.x - position.x;
  double dy = g.y - position.y;
  const double extent = std::max(std::abs(dx), std::abs(dy));
  if (extent > half) {
    dx *= half / extent;
    dy *= half / extent;
  }
  const auto [gr, gc] = local_cell(dx, dy, cfg);
  maps.goal[static_cast<std::size_t>(gr * n + gc)] = 1;
  return maps;
}

}  // namespace nop
