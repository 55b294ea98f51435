#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lanecast/geometry.hpp"
#include "lanecast/tensor.hpp"

using namespace lanecast;
using geom::Polyline;
using geom::Vec2;

namespace {
constexpr double kPi = 3.14159265358979323846;

Polyline quarter_circle(double radius, int samples) {
  Polyline p;
  for (int i = 0; i < samples; ++i) {
    const double a = 0.5 * kPi * i / (samples - 1);
    p.nodes.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return p;
}
}  // namespace

TEST_CASE("resample: straight segment lands on exact grid") {
  Polyline p{{{0, 0}, {10, 0}}};
  Polyline r = geom::resample(p, 6);
  REQUIRE(r.nodes.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(r.nodes[i].x == doctest::Approx(2.0 * i).epsilon(1e-12));
    CHECK(r.nodes[i].y == 0.0);
  }
}

TEST_CASE("resample: equal spacing and preserved endpoints") {
  // On a circular arc equal arc spacing gives congruent chords, so spacing
  // can be checked directly on the output nodes.
  Polyline p = quarter_circle(18.0, 30000);
  Polyline r = geom::resample(p, 23);
  CHECK(r.nodes.front() == p.nodes.front());
  CHECK(r.nodes.back() == p.nodes.back());
  const double step = (r.nodes[1] - r.nodes[0]).norm();
  for (std::size_t i = 1; i < r.nodes.size(); ++i) {
    const double d = (r.nodes[i] - r.nodes[i - 1]).norm();
    CHECK(std::abs(d - step) <= 1e-9 * std::max(1.0, step));
  }

  // For a cornered source, spacing is uniform as arc length along the source:
  // each output node must sit at arc position total * i / (H - 1).
  Polyline bent{{{0, 0}, {3, 1}, {4, 4}, {9, 2}, {12, 7}}};
  Polyline rb = geom::resample(bent, 23);
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < bent.nodes.size(); ++i)
    cum.push_back(cum.back() + (bent.nodes[i] - bent.nodes[i - 1]).norm());
  const double total = cum.back();
  for (std::size_t i = 0; i < rb.nodes.size(); ++i) {
    // arc position of the node, recovered by locating it on the source
    double best_arc = 0.0, best_d = 1e18;
    for (std::size_t s = 1; s < bent.nodes.size(); ++s) {
      const Vec2 a = bent.nodes[s - 1], b = bent.nodes[s];
      const Vec2 ab = b - a;
      const double len2 = ab.dot(ab);
      double u = len2 > 0 ? (rb.nodes[i] - a).dot(ab) / len2 : 0.0;
      u = std::min(1.0, std::max(0.0, u));
      const Vec2 proj = a + ab * u;
      const double d = (rb.nodes[i] - proj).norm();
      if (d < best_d) {
        best_d = d;
        best_arc = cum[s - 1] + std::sqrt(len2) * u;
      }
    }
    CHECK(best_d <= 1e-9);
    const double want = total * static_cast<double>(i) / 22.0;
    CHECK(std::abs(best_arc - want) <= 1e-9 * std::max(1.0, total));
  }
}

TEST_CASE("resample: idempotent once spacing is equal") {
  Polyline p = quarter_circle(12.0, 4000);
  Polyline once = geom::resample(p, 50);
  Polyline twice = geom::resample(once, 50);
  for (std::size_t i = 0; i < once.nodes.size(); ++i)
    CHECK((once.nodes[i] - twice.nodes[i]).norm() <= 1e-6);
}

TEST_CASE("resample: quarter circle nodes stay on the circle") {
  // dense-sampling oracle: a finely sampled arc resampled to 11 nodes
  Polyline dense = quarter_circle(10.0, 20000);
  Polyline r = geom::resample(dense, 11);
  for (const Vec2& n : r.nodes)
    CHECK(std::abs(n.norm() - 10.0) <= 1e-6);
}

TEST_CASE("resample: arc length preserved within 0.1% for smooth curves") {
  Polyline dense = quarter_circle(25.0, 5000);
  const double true_len = dense.length();
  for (int h : {20, 50, 100}) {
    Polyline r = geom::resample(dense, h);
    CHECK(std::abs(r.length() - true_len) / true_len < 1e-3);
  }
}

TEST_CASE("resample: degenerate polyline rejected") {
  Polyline p{{{1, 1}, {1, 1}}};
  CHECK_THROWS_AS(geom::resample(p, 5), std::invalid_argument);
  CHECK_THROWS_AS(geom::resample(Polyline{{{0, 0}, {1, 0}}}, 1),
                  std::invalid_argument);
}

TEST_CASE("nearest_node: agrees with an exhaustive scan on random queries") {
  Rng rng(2024);
  Polyline p;
  for (int i = 0; i < 40; ++i)
    p.nodes.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50)});
  for (int q = 0; q < 1000; ++q) {
    const Vec2 pt{rng.uniform(-60, 60), rng.uniform(-60, 60)};
    const auto got = geom::nearest_node(p, pt);
    int best = 0;
    double best_d = (p.nodes[0] - pt).norm();
    for (std::size_t i = 1; i < p.nodes.size(); ++i) {
      const double d = (p.nodes[i] - pt).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    CHECK(got.index == best);
    CHECK(got.distance == best_d);
  }
}

TEST_CASE("nearest_node: documented cases and tie rule") {
  Polyline lane;
  for (int x = 0; x <= 10; x += 2) lane.nodes.push_back({double(x), 0});

  // brute force over all nodes puts (3.1, 1) nearest to the node at x=4
  const auto r = geom::nearest_node(lane, {3.1, 1.0});
  CHECK(r.index == 2);
  CHECK(r.distance == doctest::Approx(std::sqrt(0.81 + 1.0)));

  const auto at0 = geom::nearest_node(lane, {0, 0});
  CHECK(at0.index == 0);
  CHECK(at0.distance == 0.0);

  // equidistant between nodes 1 and 2 -> lower index wins
  const auto tie = geom::nearest_node(lane, {3.0, 0.0});
  CHECK(tie.index == 1);
}

TEST_CASE("heading: axis-aligned motion and stationary default") {
  std::vector<Vec2> plus_x{{0, 0}, {1, 0}, {2, 0}};
  CHECK(geom::heading(plus_x, 2) == doctest::Approx(0.0));
  std::vector<Vec2> plus_y{{0, 0}, {0, 1}, {0, 2}};
  CHECK(geom::heading(plus_y, 2) == doctest::Approx(kPi / 2));
  std::vector<Vec2> still{{1, 1}, {1, 1}, {1, 1}};
  CHECK(geom::heading(still, 2) == 0.0);
  // stopped at the end: reuse the last valid heading
  std::vector<Vec2> stops{{0, 0}, {0, 1}, {0, 1}};
  CHECK(geom::heading(stops, 2) == doctest::Approx(kPi / 2));
}

TEST_CASE("lane_direction: straight, bend, and circular arc") {
  Polyline straight{{{0, 0}, {1, 0}, {2, 0}, {3, 0}}};
  for (int h = 0; h < 4; ++h)
    CHECK(geom::lane_direction(straight, h) == doctest::Approx(0.0));

  Polyline bend{{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}}};
  CHECK(geom::lane_direction(bend, 1) == doctest::Approx(0.0));
  CHECK(geom::lane_direction(bend, 3) == doctest::Approx(kPi / 2));

  // analytic tangent oracle: on a circle, successive segment directions
  // advance by the same increment
  Polyline arc = quarter_circle(10.0, 21);
  const double inc = geom::angle_diff(geom::lane_direction(arc, 1),
                                      geom::lane_direction(arc, 0));
  for (int h = 1; h + 1 < 20; ++h) {
    const double step = geom::angle_diff(geom::lane_direction(arc, h + 1),
                                         geom::lane_direction(arc, h));
    CHECK(step == doctest::Approx(inc).epsilon(1e-9));
  }
}

TEST_CASE("const_accel_rollout: uniform motion extrapolates linearly") {
  std::vector<Vec2> past;
  for (int i = 0; i < 5; ++i) past.push_back({double(i), 0});
  const auto r = geom::const_accel_rollout(past, 30, 1.0);
  REQUIRE(r.points.size() == 30);
  for (int t = 1; t <= 30; ++t) {
    CHECK(r.points[t - 1].x == doctest::Approx(4.0 + t).epsilon(1e-12));
    CHECK(r.points[t - 1].y == 0.0);
  }
}

TEST_CASE("const_accel_rollout: hand-evaluated accelerating case") {
  // v0 = 2, a0 = 1 per step; next point x = 3 + 2 + 0.5 = 5.5
  std::vector<Vec2> past{{0, 0}, {1, 0}, {3, 0}};
  const auto r = geom::const_accel_rollout(past, 3, 1.0);
  CHECK(r.points[0].x == doctest::Approx(5.5));
  CHECK(r.points[1].x == doctest::Approx(3.0 + 4.0 + 2.0));
  // invariant under the sampling period: same displacement per step
  const auto r10hz = geom::const_accel_rollout(past, 3, 0.1);
  CHECK(r10hz.points[0].x == doctest::Approx(5.5));
}

TEST_CASE("const_accel_rollout: stationary past holds position") {
  std::vector<Vec2> past{{2, 3}, {2, 3}, {2, 3}, {2, 3}};
  const auto r = geom::const_accel_rollout(past, 10, 0.1);
  for (const auto& p : r.points) {
    CHECK(p.x == 2.0);
    CHECK(p.y == 3.0);
  }
}

TEST_CASE("const_accel_rollout: deceleration stops instead of reversing") {
  // speed 2/step, decel 1/step^2: stops after 2 steps at x = 4+2-0.5... the
  // quadratic alone would pull the point backwards from step 2 onwards.
  std::vector<Vec2> past{{0, 0}, {2, 0}, {3, 0}};
  const auto r = geom::const_accel_rollout(past, 10, 1.0);
  const double x_stop = r.points[0].x;
  CHECK(r.points[0].x == doctest::Approx(3.0 + 1.0 - 0.5));
  for (std::size_t i = 1; i < r.points.size(); ++i)
    CHECK(r.points[i].x == doctest::Approx(x_stop));
}

TEST_CASE("const_accel_rollout: short-past fallbacks") {
  std::vector<Vec2> two{{0, 0}, {1, 1}};
  const auto r2 = geom::const_accel_rollout(two, 4, 1.0);
  CHECK(r2.points[3].x == doctest::Approx(5.0));
  CHECK(r2.points[3].y == doctest::Approx(5.0));
  std::vector<Vec2> one{{7, 7}};
  const auto r1 = geom::const_accel_rollout(one, 4, 1.0);
  for (const auto& p : r1.points) CHECK(p == Vec2{7, 7});
}
