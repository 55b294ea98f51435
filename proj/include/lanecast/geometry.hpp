#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lanecast::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

// Ordered 2D points in meters; at least 2 nodes, consecutive nodes not
// coincident (separation > 1e-9 m).
struct Polyline {
  std::vector<Vec2> nodes;

  double length() const;
  void validate() const;  // throws if the invariants are violated
};

// Constant-acceleration extrapolation of an agent; exactly the horizon's
// point count, sampled every dt seconds.
struct Rollout {
  std::vector<Vec2> points;
  double dt = 0.1;
};

// Resamples to exactly h nodes at equal arc-length spacing; first and last
// nodes are preserved. Throws on degenerate (zero-length) input.
Polyline resample(const Polyline& poly, int h);

struct NearestNode {
  int index = 0;
  double distance = 0.0;
};

// Index of the node minimizing Euclidean distance; ties break to the
// smallest index.
NearestNode nearest_node(const Polyline& poly, Vec2 p);

// Angle in (-pi, pi] of the displacement ending at index t. Displacements
// shorter than 1e-6 m reuse the most recent valid heading, defaulting to 0.
double heading(const std::vector<Vec2>& traj, std::size_t t);

// Tangent direction of segment h -> h+1 (the last node uses h-1 -> h).
double lane_direction(const Polyline& poly, int h);

// Difference a - b wrapped into (-pi, pi].
double angle_diff(double a, double b);

// Extrapolates with p(t) = p0 + v0 t + a0 t^2 / 2, velocity and acceleration
// finite-differenced from the last three points. Once forward speed would
// cross zero the position freezes (no reversing). Fewer than 3 points fall
// back to constant velocity; fewer than 2 hold position.
Rollout const_accel_rollout(const std::vector<Vec2>& past, int horizon,
                            double dt = 0.1);

}  // namespace lanecast::geom
