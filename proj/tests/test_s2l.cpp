#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lanecast/lane_fusion.hpp"
#include "lanecast/model.hpp"
#include "lanecast/scenario_gen.hpp"

using namespace lanecast;
using namespace lanecast::model;
using geom::Polyline;
using geom::Rollout;
using geom::Vec2;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.h_nodes = 20;
  cfg.k_heads = 2;
  return cfg;
}

Polyline straight_lane(int h, double spacing = 2.0) {
  Polyline lane;
  for (int i = 0; i < h; ++i) lane.nodes.push_back({spacing * i, 0.0});
  return lane;
}

Rollout stationary_rollout(Vec2 p) {
  Rollout r;
  r.points.assign(map::kFutureSteps, p);
  return r;
}

std::vector<Vec2> stationary_past(Vec2 p) {
  return std::vector<Vec2>(map::kPastSteps, p);
}

// all fused node features of a scene, flattened, for bitwise comparison
std::vector<double> fused_lane_values(Model& m, const map::Scene& scene) {
  ad::Graph g;
  const Bound b = bind_params(g, m);
  const map::NormalizedScene ns = map::to_agent_frame(scene);
  auto props = map::extract_lane_proposals(ns.scene, m.cfg.h_nodes, m.cfg.max_n);

  ad::Var social = encode_social(g, m, b, ns.scene.social_pasts);
  std::vector<Rollout> rollouts;
  std::vector<Vec2> agent_pos;
  for (const auto& past : ns.scene.social_pasts) {
    rollouts.push_back(geom::const_accel_rollout(past, m.cfg.tf(), map::kDt));
    agent_pos.push_back(past.back());
  }
  const auto order = canonical_agent_order(ns.scene.social_pasts);

  std::vector<double> all;
  for (const auto& prop : props) {
    ad::Var lane_feats = encode_lane(g, m, b, prop.nodes);
    const auto rel = relatedness(prop.nodes, rollouts, m.cfg.s2l_threshold);
    ad::Var fused = fuse_social_into_lane(g, m, b, lane_feats, social, rel,
                                          prop.nodes, agent_pos, order);
    ad::Var instance = lane_message_pass(g, m, b, fused);
    const auto v = g.value(instance);
    all.insert(all.end(), v.begin(), v.end());
  }
  return all;
}

}  // namespace

TEST_CASE("relatedness: offset, stopped, and threshold-limit cases") {
  Polyline lane = straight_lane(20);

  // 20 m lateral offset: nothing is related at the 7.5 m threshold
  auto far = relatedness(lane, {stationary_rollout({10.0, 20.0})}, 7.5);
  for (int h = 0; h < 20; ++h) CHECK_FALSE(far.is_related(h, 0));

  // stopped on the centerline: exactly the nodes within a 7.5 m arc, checked
  // against brute-force distances
  const Vec2 stop{14.0, 0.0};
  auto on = relatedness(lane, {stationary_rollout(stop)}, 7.5);
  for (int h = 0; h < 20; ++h) {
    const double d = (lane.nodes[static_cast<std::size_t>(h)] - stop).norm();
    CHECK(on.is_related(h, 0) == (d < 7.5));
    CHECK(on.distance(h, 0) == d);
  }

  // a vanishing threshold keeps only exact coincidences
  auto tiny = relatedness(lane, {stationary_rollout(lane.nodes[4])}, 1e-12);
  for (int h = 0; h < 20; ++h) CHECK(tiny.is_related(h, 0) == (h == 4));
}

TEST_CASE("relatedness: raising the threshold never shrinks a related set") {
  Model m(tiny_cfg(), 2);
  Polyline lane = straight_lane(20);
  std::vector<Rollout> rollouts{stationary_rollout({11.0, 5.0}),
                                stationary_rollout({30.0, -2.0})};
  int prev_count = -1;
  for (double thr : {1.0, 4.0, 7.5, 12.0, 40.0}) {
    const auto rel = relatedness(lane, rollouts, thr);
    int count = 0;
    for (char c : rel.related) count += c;
    CHECK(count >= prev_count);
    prev_count = count;
  }
}

TEST_CASE("s2l: no related agents reduces to the residual mlp of the input") {
  Model m(tiny_cfg(), 7);
  Polyline lane = straight_lane(20);

  ad::Graph g;
  const Bound b = bind_params(g, m);
  ad::Var lane_feats = encode_lane(g, m, b, lane);
  ad::Var social = encode_social(g, m, b, {stationary_past({200.0, 200.0})});
  const auto rel = relatedness(lane, {stationary_rollout({200.0, 200.0})}, 7.5);
  ad::Var fused = fuse_social_into_lane(g, m, b, lane_feats, social, rel, lane,
                                        {{200.0, 200.0}}, {0});
  ad::Var expected = nn::mlp2(g, lane_feats, b.lin(m.s2l_res1), b.lin(m.s2l_res2));
  const auto v1 = g.value(fused);
  const auto v2 = g.value(expected);
  REQUIRE(v1.size() == v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v2[i]);
}

TEST_CASE("s2l: agents permute without changing any instance lane (bit-exact)") {
  Model m(tiny_cfg(), 5);
  map::Scene scene = map::gen_synthetic({{{"straight", 1}}}, 40)[0];
  scene.social_pasts.clear();
  // three related agents near the lane, one duplicated pair
  const map::NormalizedScene pre = map::to_agent_frame(scene);
  (void)pre;
  scene.social_pasts.push_back(stationary_past(scene.target_past.back() + Vec2{8, 2}));
  scene.social_pasts.push_back(stationary_past(scene.target_past.back() + Vec2{15, -1}));
  scene.social_pasts.push_back(scene.social_pasts[0]);  // identical twin

  const auto base = fused_lane_values(m, scene);
  map::Scene shuffled = scene;
  std::swap(shuffled.social_pasts[0], shuffled.social_pasts[1]);
  std::swap(shuffled.social_pasts[1], shuffled.social_pasts[2]);
  const auto permuted = fused_lane_values(m, shuffled);
  REQUIRE(base.size() == permuted.size());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i] == permuted[i]);
  CHECK(!base.empty());
}

TEST_CASE("s2l: an unrelated agent has zero influence (bit-exact)") {
  Model m(tiny_cfg(), 5);
  map::Scene scene = map::gen_synthetic({{{"straight", 1}}}, 41)[0];
  scene.social_pasts.clear();
  scene.social_pasts.push_back(stationary_past(scene.target_past.back() + Vec2{10, 1}));

  const auto without = fused_lane_values(m, scene);

  // far agent: more than 7.5 m from every node of every rollout pairing
  map::Scene with_far = scene;
  with_far.social_pasts.push_back(
      stationary_past(scene.target_past.back() + Vec2{0, 60}));
  const auto with1 = fused_lane_values(m, with_far);

  // perturbing the unrelated agent's trajectory changes nothing either
  map::Scene with_far2 = with_far;
  for (auto& p : with_far2.social_pasts[1]) p = p + Vec2{3.0, 4.0};
  const auto with2 = fused_lane_values(m, with_far2);

  REQUIRE(without.size() == with1.size());
  for (std::size_t i = 0; i < without.size(); ++i) {
    CHECK(without[i] == with1[i]);
    CHECK(with1[i] == with2[i]);
  }
}

TEST_CASE("s2l message pass: kernel-3 stack has a two-node reach") {
  Model m(tiny_cfg(), 3);
  const int h = 12, d = m.cfg.d;
  Rng rng(8);
  std::vector<double> base(static_cast<std::size_t>(h) * d);
  for (double& v : base) v = rng.uniform(-1, 1);
  std::vector<double> poked = base;
  poked[static_cast<std::size_t>(5) * d + 3] += 0.75;

  ad::Graph g1, g2;
  const auto v1 = g1.value(
      lane_message_pass(g1, m, bind_params(g1, m), g1.constant(h, d, base)));
  const auto v2 = g2.value(
      lane_message_pass(g2, m, bind_params(g2, m), g2.constant(h, d, poked)));
  for (int row = 0; row < h; ++row) {
    bool same = true;
    for (int c = 0; c < d; ++c)
      same = same && v1[static_cast<std::size_t>(row) * d + c] ==
                         v2[static_cast<std::size_t>(row) * d + c];
    if (row < 3 || row > 7)
      CHECK(same);
    else if (row == 5)
      CHECK_FALSE(same);
  }
}

TEST_CASE("s2l message pass: zero weights pass the input through") {
  Model m(tiny_cfg(), 3);
  for (int idx : {m.s2l_mp1.w, m.s2l_mp1.b, m.s2l_mp2.w, m.s2l_mp2.b})
    for (double& v : m.params.at(idx).values) v = 0.0;
  Rng rng(9);
  std::vector<double> base(static_cast<std::size_t>(10) * m.cfg.d);
  for (double& v : base) v = rng.uniform(-1, 1);
  ad::Graph g;
  ad::Var in = g.constant(10, m.cfg.d, base);
  const auto out = g.value(lane_message_pass(g, m, bind_params(g, m), in));
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(out[i] == base[i]);
}
