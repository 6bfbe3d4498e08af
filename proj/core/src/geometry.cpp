#include "nop/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace nop {

double closest_parameter(const Point& p, const Point& q, const Point& c) {
  const Point d = q - p;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return 0.0;
  return std::clamp(dot(c - p, d) / len2, 0.0, 1.0);
}

double point_segment_distance(const Point& p, const Point& q, const Point& c) {
  const double t = closest_parameter(p, q, c);
  return distance(p + (q - p) * t, c);
}

bool segment_hits_obstacle(const Point& p, const Point& q, const Obstacle& obs) {
  return point_segment_distance(p, q, obs.center) <= obs.radius;
}

bool segment_hits_any(const Point& p, const Point& q, std::span<const Obstacle> obstacles) {
  return std::any_of(obstacles.begin(), obstacles.end(),
                     [&](const Obstacle& o) { return segment_hits_obstacle(p, q, o); });
}

bool inside_unit_square(const Point& p) {
  return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
}

double path_length(std::span<const Point> path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += distance(path[i - 1], path[i]);
  return total;
}

Polyline resample_polyline(std::span<const Point> path, double step) {
  if (step <= 0.0) throw std::invalid_argument("resample_polyline: step must be positive");
  Polyline out;
  if (path.empty()) return out;
  out.push_back(path.front());
  Point cur = path.front();
  std::size_t seg = 0;  // current point lies on segment [seg, seg + 1]
  const Point end = path.back();

  while (seg + 1 < path.size()) {
    if (distance(cur, end) <= step) break;
    // First point along the remaining path at Euclidean distance `step`
    // from cur. Distances along a segment from an outside point are
    // unimodal, so scan forward for the first segment that reaches it.
    bool found = false;
    for (std::size_t s = seg; s + 1 < path.size(); ++s) {
      const Point a = (s == seg) ? cur : path[s];
      const Point b = path[s + 1];
      if (distance(cur, b) < step) continue;
      // Solve |a + t (b - a) - cur| = step for the largest root in [0, 1].
      const Point d = b - a;
      const Point f = a - cur;
      const double A = dot(d, d);
      const double B = 2.0 * dot(f, d);
      const double C = dot(f, f) - step * step;
      const double disc = std::max(0.0, B * B - 4.0 * A * C);
      double t = A > 0.0 ? (-B + std::sqrt(disc)) / (2.0 * A) : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      Point next = a + d * t;
      // Pin the chord length to exactly `step`.
      const double len = distance(cur, next);
      if (len > 0.0) next = cur + (next - cur) * (step / len);
      out.push_back(next);
      cur = next;
      seg = s;
      found = true;
      break;
    }
    if (!found) break;
  }
  if (!(out.back() == end)) out.push_back(end);
  return out;
}

}  // namespace nop
