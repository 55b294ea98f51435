#include <doctest.h>

#include <cmath>

#include "lanecast/encoders.hpp"
#include "lanecast/model.hpp"
#include "lanecast/scenario_gen.hpp"

using namespace lanecast;
using namespace lanecast::model;
using geom::Polyline;
using geom::Vec2;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.h_nodes = 12;
  cfg.k_heads = 2;
  return cfg;
}

std::vector<Vec2> ramp_past(double step = 0.8) {
  std::vector<Vec2> past;
  for (int k = 0; k < map::kPastSteps; ++k)
    past.push_back({step * k - step * (map::kPastSteps - 1), 0.1 * k});
  return past;
}

void zero_params(Model& m) {
  for (std::size_t i = 0; i < m.params.count(); ++i)
    for (double& v : m.params.at(static_cast<int>(i)).values) v = 0.0;
}

}  // namespace

TEST_CASE("encoders: output shapes") {
  Model m(tiny_cfg(), 4);
  ad::Graph g;
  const Bound b = bind_params(g, m);

  ad::Var tf = encode_target(g, m, b, ramp_past());
  CHECK(g.rows(tf) == map::kPastSteps);
  CHECK(g.cols(tf) == m.cfg.d);

  std::vector<std::vector<Vec2>> socials{ramp_past(0.5), ramp_past(1.1)};
  ad::Var sf = encode_social(g, m, b, socials);
  CHECK(g.rows(sf) == 2);
  CHECK(g.cols(sf) == m.cfg.d);
  CHECK_FALSE(encode_social(g, m, b, {}).valid());

  Polyline lane;
  for (int i = 0; i < 12; ++i) lane.nodes.push_back({2.0 * i, 0.0});
  ad::Var lf = encode_lane(g, m, b, lane);
  CHECK(g.rows(lf) == 12);
  CHECK(g.cols(lf) == m.cfg.d);
}

TEST_CASE("encoders: perturbing the oldest step only moves nearby outputs") {
  Model m(tiny_cfg(), 4);
  auto past = ramp_past();
  auto past2 = past;
  past2[0] = past2[0] + Vec2{0.4, -0.3};  // differs only at t = -19

  ad::Graph g1, g2;
  ad::Var f1 = encode_target(g1, m, bind_params(g1, m), past);
  ad::Var f2 = encode_target(g2, m, bind_params(g2, m), past2);
  const auto v1 = g1.value(f1);
  const auto v2 = g2.value(f2);

  // channels change at steps 0 (position) and 1 (displacement); the widest
  // kernel is 7, so steps past 1 + 3 are untouched
  bool changed_near = false;
  for (int t = 0; t < map::kPastSteps; ++t) {
    bool same = true;
    for (int c = 0; c < m.cfg.d; ++c)
      same = same && v1[static_cast<std::size_t>(t) * m.cfg.d + c] ==
                         v2[static_cast<std::size_t>(t) * m.cfg.d + c];
    if (t <= 4)
      changed_near = changed_near || !same;
    else
      CHECK(same);
  }
  CHECK(changed_near);
}

TEST_CASE("encoders: zero weights map zero input to zero features") {
  Model m(tiny_cfg(), 4);
  zero_params(m);
  ad::Graph g;
  const Bound b = bind_params(g, m);
  std::vector<Vec2> still(map::kPastSteps, Vec2{0, 0});
  ad::Var f = encode_target(g, m, b, still);
  for (double v : g.value(f)) CHECK(v == 0.0);
}

TEST_CASE("encoders: permuting agents permutes social rows") {
  Model m(tiny_cfg(), 9);
  std::vector<std::vector<Vec2>> socials{ramp_past(0.4), ramp_past(0.9),
                                         ramp_past(1.3)};
  std::vector<std::vector<Vec2>> permuted{socials[2], socials[0], socials[1]};

  ad::Graph g1, g2;
  const auto v1 = g1.value(encode_social(g1, m, bind_params(g1, m), socials));
  const auto v2 = g2.value(encode_social(g2, m, bind_params(g2, m), permuted));
  const int d = m.cfg.d;
  for (int c = 0; c < d; ++c) {
    CHECK(v1[0 * d + c] == v2[1 * d + c]);
    CHECK(v1[1 * d + c] == v2[2 * d + c]);
    CHECK(v1[2 * d + c] == v2[0 * d + c]);
  }
}

TEST_CASE("encoders: reversing a lane changes its features") {
  Model m(tiny_cfg(), 4);
  Polyline lane, reversed;
  for (int i = 0; i < 12; ++i) lane.nodes.push_back({2.0 * i, 0.5 * i});
  reversed.nodes.assign(lane.nodes.rbegin(), lane.nodes.rend());

  ad::Graph g;
  const Bound b = bind_params(g, m);
  const auto v1 = g.value(encode_lane(g, m, b, lane));
  const auto v2 = g.value(encode_lane(g, m, b, reversed));
  bool any_diff = false;
  for (std::size_t i = 0; i < v1.size(); ++i) any_diff = any_diff || v1[i] != v2[i];
  CHECK(any_diff);
}

TEST_CASE("encoders: exact rigid motions are neutralized bit-exactly") {
  // Quantized coordinates plus a dyadic translation and a quarter-turn keep
  // every normalization step exact, so the agent-frame scenes must match to
  // the bit and so must every encoding.
  map::Scene s = map::gen_synthetic({{{"fork", 1}}}, 6)[0];
  auto quantize = [](Vec2 p) {
    return Vec2{std::round(p.x * 1024.0) / 1024.0,
                std::round(p.y * 1024.0) / 1024.0};
  };
  auto transform = [&](Vec2 p) {
    const Vec2 q{-p.y, p.x};  // exact +90 degree rotation
    return Vec2{q.x + 4096.0, q.y - 2048.0};
  };
  for (auto& p : s.target_past) p = quantize(p);
  for (auto& sp : s.social_pasts)
    for (auto& p : sp) p = quantize(p);
  for (auto& [id, poly] : s.lanes.segments)
    for (auto& p : poly.nodes) p = quantize(p);
  if (s.gt_future)
    for (auto& p : *s.gt_future) p = quantize(p);

  map::Scene moved = s;
  for (auto& p : moved.target_past) p = transform(p);
  for (auto& sp : moved.social_pasts)
    for (auto& p : sp) p = transform(p);
  for (auto& [id, poly] : moved.lanes.segments)
    for (auto& p : poly.nodes) p = transform(p);
  if (moved.gt_future)
    for (auto& p : *moved.gt_future) p = transform(p);

  const map::NormalizedScene na = map::to_agent_frame(s);
  const map::NormalizedScene nb = map::to_agent_frame(moved);
  REQUIRE(na.scene.target_past.size() == nb.scene.target_past.size());
  for (std::size_t i = 0; i < na.scene.target_past.size(); ++i) {
    CHECK(na.scene.target_past[i].x == nb.scene.target_past[i].x);
    CHECK(na.scene.target_past[i].y == nb.scene.target_past[i].y);
  }
  for (const auto& [id, poly] : na.scene.lanes.segments) {
    const auto& other = nb.scene.lanes.segments.at(id);
    for (std::size_t i = 0; i < poly.nodes.size(); ++i) {
      CHECK(poly.nodes[i].x == other.nodes[i].x);
      CHECK(poly.nodes[i].y == other.nodes[i].y);
    }
  }

  Model m(tiny_cfg(), 12);
  ad::Graph g1, g2;
  const auto f1 =
      g1.value(encode_target(g1, m, bind_params(g1, m), na.scene.target_past));
  const auto f2 =
      g2.value(encode_target(g2, m, bind_params(g2, m), nb.scene.target_past));
  for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == f2[i]);
}
