#include "lanecast/geometry.hpp"

#include <stdexcept>

namespace lanecast::geom {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kMinDisplacement = 1e-6;
}  // namespace

double Polyline::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i)
    total += (nodes[i] - nodes[i - 1]).norm();
  return total;
}

void Polyline::validate() const {
  if (nodes.size() < 2)
    throw std::invalid_argument("Polyline: needs at least 2 nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if ((nodes[i] - nodes[i - 1]).norm() <= 1e-9)
      throw std::invalid_argument("Polyline: coincident consecutive nodes at " +
                                  std::to_string(i));
}

Polyline resample(const Polyline& poly, int h) {
  if (h < 2) throw std::invalid_argument("resample: H must be >= 2");
  if (poly.nodes.size() < 2)
    throw std::invalid_argument("resample: polyline needs at least 2 nodes");
  std::vector<double> cum(poly.nodes.size(), 0.0);
  for (std::size_t i = 1; i < poly.nodes.size(); ++i)
    cum[i] = cum[i - 1] + (poly.nodes[i] - poly.nodes[i - 1]).norm();
  const double total = cum.back();
  if (total <= 1e-12)
    throw std::invalid_argument("resample: degenerate zero-length polyline");

  Polyline out;
  out.nodes.resize(static_cast<std::size_t>(h));
  out.nodes.front() = poly.nodes.front();
  out.nodes.back() = poly.nodes.back();
  std::size_t seg = 1;
  for (int i = 1; i < h - 1; ++i) {
    const double s = total * static_cast<double>(i) / (h - 1);
    while (seg < cum.size() - 1 && cum[seg] < s) ++seg;
    const double seg_len = cum[seg] - cum[seg - 1];
    const double u = seg_len > 0.0 ? (s - cum[seg - 1]) / seg_len : 0.0;
    out.nodes[static_cast<std::size_t>(i)] =
        poly.nodes[seg - 1] + (poly.nodes[seg] - poly.nodes[seg - 1]) * u;
  }
  return out;
}

NearestNode nearest_node(const Polyline& poly, Vec2 p) {
  NearestNode best{0, (poly.nodes[0] - p).norm()};
  for (std::size_t i = 1; i < poly.nodes.size(); ++i) {
    const double d = (poly.nodes[i] - p).norm();
    if (d < best.distance) best = {static_cast<int>(i), d};
  }
  return best;
}

double heading(const std::vector<Vec2>& traj, std::size_t t) {
  if (traj.size() < 2 || t >= traj.size())
    throw std::invalid_argument("heading: need >= 2 points and a valid index");
  for (std::size_t k = t; k >= 1; --k) {
    const Vec2 d = traj[k] - traj[k - 1];
    if (d.norm() >= kMinDisplacement) return std::atan2(d.y, d.x);
  }
  return 0.0;
}

double lane_direction(const Polyline& poly, int h) {
  const int n = static_cast<int>(poly.nodes.size());
  if (h < 0 || h >= n)
    throw std::invalid_argument("lane_direction: node index out of range");
  const int a = (h == n - 1) ? h - 1 : h;
  const Vec2 d = poly.nodes[static_cast<std::size_t>(a + 1)] -
                 poly.nodes[static_cast<std::size_t>(a)];
  return std::atan2(d.y, d.x);
}

double angle_diff(double a, double b) {
  double d = a - b;
  while (d > kPi) d -= 2.0 * kPi;
  while (d <= -kPi) d += 2.0 * kPi;
  return d;
}

Rollout const_accel_rollout(const std::vector<Vec2>& past, int horizon,
                            double dt) {
  if (horizon < 1)
    throw std::invalid_argument("const_accel_rollout: horizon must be >= 1");
  Rollout out;
  out.dt = dt;
  out.points.resize(static_cast<std::size_t>(horizon));

  if (past.empty())
    throw std::invalid_argument("const_accel_rollout: empty past");
  const Vec2 p0 = past.back();

  if (past.size() == 1) {
    for (auto& p : out.points) p = p0;
    return out;
  }
  if (past.size() == 2) {
    const Vec2 v = (past[1] - past[0]) * (1.0 / dt);
    for (int t = 1; t <= horizon; ++t)
      out.points[static_cast<std::size_t>(t - 1)] = p0 + v * (t * dt);
    return out;
  }

  const Vec2 pm2 = past[past.size() - 3];
  const Vec2 pm1 = past[past.size() - 2];
  const Vec2 v1 = (pm1 - pm2) * (1.0 / dt);
  const Vec2 v0 = (p0 - pm1) * (1.0 / dt);
  const Vec2 a0 = (v0 - v1) * (1.0 / dt);
  const double speed = v0.norm();

  if (speed < 1e-9) {
    for (auto& p : out.points) p = p0;
    return out;
  }

  // Time at which speed along the initial direction of travel reaches zero.
  const Vec2 dir = v0 * (1.0 / speed);
  const double decel = a0.dot(dir);
  const double t_stop =
      decel < 0.0 ? speed / (-decel) : std::numeric_limits<double>::infinity();

  for (int t = 1; t <= horizon; ++t) {
    const double tau = std::min(t * dt, t_stop);
    out.points[static_cast<std::size_t>(t - 1)] =
        p0 + v0 * tau + a0 * (0.5 * tau * tau);
  }
  return out;
}

}  // namespace lanecast::geom
