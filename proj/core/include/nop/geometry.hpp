#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace nop {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
  Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
  Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
  Point operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Point& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Circular obstacle; a closed disc, so boundary contact counts as collision.
struct Obstacle {
  Point center;
  double radius = 0.0;

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

using Polyline = std::vector<Point>;

/// Parameter in [0, 1] of the point on segment pq closest to c.
double closest_parameter(const Point& p, const Point& q, const Point& c);

double point_segment_distance(const Point& p, const Point& q, const Point& c);

/// True iff the closed segment pq intersects the closed disc of obs.
bool segment_hits_obstacle(const Point& p, const Point& q, const Obstacle& obs);

bool segment_hits_any(const Point& p, const Point& q, std::span<const Obstacle> obstacles);

bool inside_unit_square(const Point& p);

/// Sum of consecutive Euclidean distances; 0 for a single point.
double path_length(std::span<const Point> path);

/// Walks along `path` emitting points whose consecutive Euclidean distance
/// is exactly `step` (the last point snaps to the path end with a shorter
/// segment). Chords cut path corners by at most step / 2.
Polyline resample_polyline(std::span<const Point> path, double step);

}  // namespace nop
