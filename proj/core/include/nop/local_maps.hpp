#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nop/geometry.hpp"
#include "nop/instance.hpp"

namespace nop {

struct LocalMapConfig {
  int size = 32;          // cells per side
  double window = 0.32;   // world units per side
  /// Also mark cells whose center lies outside [0,1]^2 as obstacles.
  bool mark_out_of_bounds = false;

  friend bool operator==(const LocalMapConfig&, const LocalMapConfig&) = default;
};

/// Read-only rectangular view into a row-major grid.
struct GridView {
  const std::uint8_t* data = nullptr;
  int rows = 0;
  int cols = 0;
  int stride = 0;

  std::uint8_t at(int r, int c) const { return data[r * stride + c]; }
};

/// Agent-centred binary rasters. Row 0 is the northern edge, column 0 the
/// western edge; the agent sits at the corner shared by cells
/// (size/2 - 1, size/2 - 1) and (size/2, size/2), so a goal at the agent
/// position falls in cell (size/2, size/2).
struct LocalMaps {
  int size = 0;
  std::vector<std::uint8_t> obstacle;
  std::vector<std::uint8_t> goal;

  std::uint8_t obstacle_at(int r, int c) const { return obstacle[static_cast<std::size_t>(r * size + c)]; }
  std::uint8_t goal_at(int r, int c) const { return goal[static_cast<std::size_t>(r * size + c)]; }

  enum class Half { North, East, South, West };
  /// Half of a grid: North/South are size/2 x size, East/West size x size/2.
  static GridView half(const std::vector<std::uint8_t>& grid, int size, Half h);
  GridView obstacle_half(Half h) const { return half(obstacle, size, h); }
  GridView goal_half(Half h) const { return half(goal, size, h); }

  /// Channels consumed by the direction head, each size x size: obstacle,
  /// goal, then the N/E/S/W halves of obstacle and of goal, each embedded
  /// in a zero grid at its own position.
  static constexpr int kChannels = 10;
  template <typename T>
  void fill_channels(std::span<T> out) const;
};

/// Rasterizes obstacles and the goal around `position`. A goal outside the
/// window is projected onto the window boundary along the agent->goal ray.
LocalMaps rasterize_local_maps(const Point& position, const NopInstance& inst, int goal,
                               const LocalMapConfig& cfg = {});

/// Grid cell (row, col) containing the offset (dx, dy) from the agent,
/// clamped to the window.
std::pair<int, int> local_cell(double dx, double dy, const LocalMapConfig& cfg);

}  // namespace nop
