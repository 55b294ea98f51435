#include "lanecast/scenario_gen.hpp"

#include <cmath>
#include <stdexcept>

#include "lanecast/tensor.hpp"

namespace lanecast::map {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDenseStep = 0.5;   // centerline sampling used for kinematics
constexpr double kNodeStep = 2.5;    // lane-graph node spacing
constexpr int kNodesPerSegment = 6;  // ~15 m segments

// Piecewise straight/arc centerline builder with tangent continuity.
struct PathBuilder {
  std::vector<Vec2> pts;
  double heading = 0.0;

  explicit PathBuilder(Vec2 start, double h) : heading(h) { pts.push_back(start); }

  void straight(double len) {
    const int n = std::max(1, static_cast<int>(std::ceil(len / kDenseStep)));
    const Vec2 dir{std::cos(heading), std::sin(heading)};
    const Vec2 base = pts.back();
    for (int i = 1; i <= n; ++i)
      pts.push_back(base + dir * (len * i / n));
  }

  // sweep > 0 turns left, < 0 turns right.
  void arc(double radius, double sweep) {
    const double len = std::abs(sweep) * radius;
    const int n = std::max(2, static_cast<int>(std::ceil(len / kDenseStep)));
    const double side = sweep > 0 ? 1.0 : -1.0;
    const Vec2 center = pts.back() + Vec2{-std::sin(heading), std::cos(heading)} * (side * radius);
    const double a0 = std::atan2(pts.back().y - center.y, pts.back().x - center.x);
    for (int i = 1; i <= n; ++i) {
      const double a = a0 + sweep * i / n;
      pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
    }
    heading += sweep;
  }
};

// Arc-length table over a dense centerline.
struct ArcPath {
  std::vector<Vec2> pts;
  std::vector<double> cum;

  explicit ArcPath(std::vector<Vec2> p) : pts(std::move(p)) {
    cum.resize(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
      cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return cum.back(); }

  Vec2 at(double s, double lateral = 0.0) const {
    s = std::min(std::max(s, 0.0), cum.back());
    std::size_t i = 1;
    while (i + 1 < cum.size() && cum[i] < s) ++i;
    const double seg = cum[i] - cum[i - 1];
    const double u = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
    const Vec2 d = pts[i] - pts[i - 1];
    const double len = d.norm();
    const Vec2 tangent = len > 0.0 ? d * (1.0 / len) : Vec2{1, 0};
    const Vec2 normal{-tangent.y, tangent.x};
    return pts[i - 1] + d * u + normal * lateral;
  }
};

struct WorldPose {
  Vec2 shift;
  double rot = 0.0;

  Vec2 apply(Vec2 p) const {
    return {std::cos(rot) * p.x - std::sin(rot) * p.y + shift.x,
            std::sin(rot) * p.x + std::cos(rot) * p.y + shift.y};
  }
};

// Splits a dense centerline into chained lane segments and appends them to
// the graph. Returns the ids in path order.
std::vector<int> add_chain(LaneGraph& g, const ArcPath& path, int& next_id) {
  const int total_nodes =
      std::max(2, static_cast<int>(std::round(path.length() / kNodeStep)) + 1);
  std::vector<Vec2> nodes(static_cast<std::size_t>(total_nodes));
  for (int i = 0; i < total_nodes; ++i)
    nodes[static_cast<std::size_t>(i)] =
        path.at(path.length() * i / (total_nodes - 1));

  std::vector<int> ids;
  int start = 0;
  while (start + 1 < total_nodes) {
    int end = std::min(start + kNodesPerSegment, total_nodes - 1);
    if (total_nodes - 1 - end == 1) end = total_nodes - 1;  // avoid 2-node tail
    Polyline seg;
    seg.nodes.assign(nodes.begin() + start, nodes.begin() + end + 1);
    const int id = next_id++;
    g.segments[id] = std::move(seg);
    if (!ids.empty()) {
      g.successors[ids.back()].push_back(id);
      g.predecessors[id].push_back(ids.back());
    }
    ids.push_back(id);
    start = end;
  }
  return ids;
}

void link(LaneGraph& g, int from, int to) {
  g.successors[from].push_back(to);
  g.predecessors[to].push_back(from);
}

std::vector<Vec2> past_along(const ArcPath& path, double s0, double speed) {
  std::vector<Vec2> past(kPastSteps);
  for (int k = 0; k < kPastSteps; ++k) {
    const double s = s0 - speed * kDt * (kPastSteps - 1 - k);
    past[static_cast<std::size_t>(k)] = path.at(s);
  }
  return past;
}

struct LateralNoise {
  double amp, wavelength, phase;
  double at(int t) const {
    return amp * std::sin(2.0 * kPi * t / wavelength + phase);
  }
};

LateralNoise draw_noise(Rng& rng) {
  return {rng.uniform(0.05, 0.25), rng.uniform(15.0, 30.0),
          rng.uniform(0.0, 2.0 * kPi)};
}

std::vector<Vec2> future_const_speed(const ArcPath& path, double s0,
                                     double speed, const LateralNoise& noise) {
  std::vector<Vec2> fut(kFutureSteps);
  for (int t = 1; t <= kFutureSteps; ++t)
    fut[static_cast<std::size_t>(t - 1)] =
        path.at(s0 + speed * kDt * t, noise.at(t));
  return fut;
}

void apply_pose(Scene& scene, const WorldPose& pose) {
  for (Vec2& p : scene.target_past) p = pose.apply(p);
  for (auto& sp : scene.social_pasts)
    for (Vec2& p : sp) p = pose.apply(p);
  for (auto& [id, poly] : scene.lanes.segments) {
    (void)id;
    for (Vec2& p : poly.nodes) p = pose.apply(p);
  }
  if (scene.gt_future)
    for (Vec2& p : *scene.gt_future) p = pose.apply(p);
}

WorldPose draw_pose(Rng& rng) {
  return {{rng.uniform(-400.0, 400.0), rng.uniform(-400.0, 400.0)},
          rng.uniform(0.0, 2.0 * kPi)};
}

// Social agent moving at constant speed on a lateral offset of the path.
std::vector<Vec2> offset_agent_past(const ArcPath& path, double s0, double speed,
                                    double lateral) {
  std::vector<Vec2> past(kPastSteps);
  for (int k = 0; k < kPastSteps; ++k) {
    const double s = s0 - speed * kDt * (kPastSteps - 1 - k);
    past[static_cast<std::size_t>(k)] = path.at(s, lateral);
  }
  return past;
}

Scene make_straight(Rng& rng, const std::string& id) {
  Scene scene;
  scene.scene_id = id;
  PathBuilder pb({0, 0}, 0.0);
  pb.straight(220.0);
  ArcPath path(pb.pts);

  int next_id = 0;
  add_chain(scene.lanes, path, next_id);

  const double v = rng.uniform(7.0, 12.0);
  const double s0 = 60.0;
  scene.target_past = past_along(path, s0, v);
  scene.gt_future = future_const_speed(path, s0, v, draw_noise(rng));

  const int n_social = rng.uniform_int(3);
  for (int i = 0; i < n_social; ++i) {
    const double lat = rng.uniform() < 0.5 ? 3.5 : -3.5;
    const double ds = rng.uniform(-30.0, 50.0);
    const double sv = v * rng.uniform(0.8, 1.2);
    scene.social_pasts.push_back(offset_agent_past(path, s0 + ds, sv, lat));
  }
  scene.meta = {{"template", "straight"}, {"speed", v}};
  apply_pose(scene, draw_pose(rng));
  return scene;
}

Scene make_curve(Rng& rng, const std::string& id) {
  Scene scene;
  scene.scene_id = id;
  const double radius = rng.uniform(35.0, 70.0);
  const double sweep = rng.uniform(1.0, 1.5) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
  PathBuilder pb({0, 0}, 0.0);
  pb.straight(55.0);
  pb.arc(radius, sweep);
  pb.straight(45.0);
  ArcPath path(pb.pts);

  int next_id = 0;
  add_chain(scene.lanes, path, next_id);

  const double v = rng.uniform(7.0, 11.0);
  const double s0 = 48.0;
  scene.target_past = past_along(path, s0, v);
  scene.gt_future = future_const_speed(path, s0, v, draw_noise(rng));
  if (rng.uniform() < 0.5) {
    const double lat = rng.uniform() < 0.5 ? 3.5 : -3.5;
    scene.social_pasts.push_back(
        offset_agent_past(path, s0 + rng.uniform(-20.0, 40.0),
                          v * rng.uniform(0.8, 1.2), lat));
  }
  scene.meta = {{"template", "curve"}, {"speed", v}};
  apply_pose(scene, draw_pose(rng));
  return scene;
}

Scene make_fork(Rng& rng, const std::string& id) {
  Scene scene;
  scene.scene_id = id;
  const double stem_len = 70.0;
  const double turn = rng.uniform(kPi / 9.0, kPi / 5.0);  // 20..36 degrees
  const double radius = rng.uniform(25.0, 45.0);

  PathBuilder stem({0, 0}, 0.0);
  stem.straight(stem_len);

  auto build_branch = [&](double sign) {
    PathBuilder b(stem.pts.back(), 0.0);
    b.arc(radius, sign * turn);
    b.straight(120.0 - radius * turn);
    return b.pts;
  };
  const std::vector<Vec2> left_pts = build_branch(+1.0);
  const std::vector<Vec2> right_pts = build_branch(-1.0);

  ArcPath stem_path(stem.pts);
  int next_id = 0;
  const auto stem_ids = add_chain(scene.lanes, stem_path, next_id);
  const auto left_ids = add_chain(scene.lanes, ArcPath(left_pts), next_id);
  const auto right_ids = add_chain(scene.lanes, ArcPath(right_pts), next_id);
  link(scene.lanes, stem_ids.back(), left_ids.front());
  link(scene.lanes, stem_ids.back(), right_ids.front());

  const double v = rng.uniform(7.0, 11.0);
  const double s0 = stem_len - rng.uniform(6.0, 14.0);
  scene.target_past = past_along(stem_path, s0, v);

  // Full routes through each branch, for the ground truth and the
  // counterfactual endpoint of the branch not taken.
  auto route = [&](const std::vector<Vec2>& branch) {
    std::vector<Vec2> all = stem.pts;
    all.insert(all.end(), branch.begin() + 1, branch.end());
    return ArcPath(all);
  };
  const ArcPath left_route = route(left_pts);
  const ArcPath right_route = route(right_pts);

  const int choice = rng.uniform_int(2);  // 0 = left, 1 = right
  const ArcPath& taken = choice == 0 ? left_route : right_route;
  scene.gt_future = future_const_speed(taken, s0, v, draw_noise(rng));

  if (rng.uniform() < 0.4) {
    const double lat = rng.uniform() < 0.5 ? 3.5 : -3.5;
    scene.social_pasts.push_back(
        offset_agent_past(stem_path, s0 + rng.uniform(-25.0, 10.0),
                          v * rng.uniform(0.8, 1.1), lat));
  }

  const Vec2 end_left = left_route.at(s0 + v * kDt * kFutureSteps);
  const Vec2 end_right = right_route.at(s0 + v * kDt * kFutureSteps);
  const WorldPose pose = draw_pose(rng);
  apply_pose(scene, pose);
  const Vec2 wl = pose.apply(end_left), wr = pose.apply(end_right);
  scene.meta = {{"template", "fork"},
                {"speed", v},
                {"fork_choice", choice},
                {"branch_endpoints", {{wl.x, wl.y}, {wr.x, wr.y}}}};
  return scene;
}

Scene make_intersection(Rng& rng, const std::string& id) {
  Scene scene;
  scene.scene_id = id;
  const double approach_len = 72.0;

  PathBuilder approach({-80.0, 0.0}, 0.0);
  approach.straight(approach_len);  // ends at (-8, 0)

  auto through = [&]() {
    PathBuilder b(approach.pts.back(), 0.0);
    b.straight(88.0);
    return b.pts;
  };
  auto turn = [&](double sign) {
    PathBuilder b(approach.pts.back(), 0.0);
    b.arc(12.0, sign * kPi / 2.0);
    b.straight(68.0);
    return b.pts;
  };
  const std::vector<Vec2> straight_pts = through();
  const std::vector<Vec2> left_pts = turn(+1.0);
  const std::vector<Vec2> right_pts = turn(-1.0);

  PathBuilder neighbor({-80.0, 3.5}, 0.0);
  neighbor.straight(160.0);

  ArcPath approach_path(approach.pts);
  int next_id = 0;
  const auto a_ids = add_chain(scene.lanes, approach_path, next_id);
  const auto s_ids = add_chain(scene.lanes, ArcPath(straight_pts), next_id);
  const auto l_ids = add_chain(scene.lanes, ArcPath(left_pts), next_id);
  const auto r_ids = add_chain(scene.lanes, ArcPath(right_pts), next_id);
  const auto n_ids = add_chain(scene.lanes, ArcPath(neighbor.pts), next_id);
  link(scene.lanes, a_ids.back(), s_ids.front());
  link(scene.lanes, a_ids.back(), l_ids.front());
  link(scene.lanes, a_ids.back(), r_ids.front());
  for (std::size_t i = 0; i < a_ids.size() && i < n_ids.size(); ++i)
    scene.lanes.left_neighbor[a_ids[i]] = n_ids[i];

  const double v = rng.uniform(6.0, 10.0);
  const double s0 = approach_len - rng.uniform(12.0, 22.0);
  scene.target_past = past_along(approach_path, s0, v);

  auto route = [&](const std::vector<Vec2>& option) {
    std::vector<Vec2> all = approach.pts;
    all.insert(all.end(), option.begin() + 1, option.end());
    return ArcPath(all);
  };
  const int choice = rng.uniform_int(3);
  const ArcPath taken =
      route(choice == 0 ? straight_pts : (choice == 1 ? left_pts : right_pts));
  scene.gt_future = future_const_speed(taken, s0, v, draw_noise(rng));

  if (rng.uniform() < 0.5)
    scene.social_pasts.push_back(offset_agent_past(
        ArcPath(neighbor.pts), rng.uniform(30.0, 90.0), v * rng.uniform(0.8, 1.2), 0.0));

  scene.meta = {{"template", "intersection"}, {"speed", v}, {"turn_choice", choice}};
  apply_pose(scene, draw_pose(rng));
  return scene;
}

// Emits the blocked scene and its matched free-lane twin. Identical lane
// graph and target past; only the blocker and the future differ.
std::pair<Scene, Scene> make_congestion_pair(Rng& rng, const std::string& base_id) {
  PathBuilder pb({0, 0}, 0.0);
  pb.straight(220.0);
  ArcPath path(pb.pts);

  const double v = rng.uniform(8.0, 11.0);
  const double s0 = 60.0;
  const double block_ahead = rng.uniform(15.0, 19.0);
  const double stop_gap = 3.0;
  const WorldPose pose = draw_pose(rng);
  const LateralNoise noise = draw_noise(rng);

  Scene blocked;
  blocked.scene_id = base_id + "_blocked";
  int next_id = 0;
  add_chain(blocked.lanes, path, next_id);
  blocked.target_past = past_along(path, s0, v);

  // stationary blocker on the centerline ahead
  const Vec2 blocker_pos = path.at(s0 + block_ahead);
  blocked.social_pasts.push_back(std::vector<Vec2>(kPastSteps, blocker_pos));

  // constant deceleration to a stop behind the blocker
  const double stop_dist = block_ahead - stop_gap;
  const double decel = v * v / (2.0 * stop_dist);
  const double t_stop = v / decel;
  std::vector<Vec2> fut(kFutureSteps);
  for (int t = 1; t <= kFutureSteps; ++t) {
    const double tau = std::min(t * kDt, t_stop);
    const double s = s0 + v * tau - 0.5 * decel * tau * tau;
    fut[static_cast<std::size_t>(t - 1)] = path.at(s, noise.at(t) * 0.5);
  }
  blocked.gt_future = fut;
  blocked.meta = {{"template", "congestion"},
                  {"variant", "blocked"},
                  {"pair_id", base_id},
                  {"speed", v}};

  Scene free;
  free.scene_id = base_id + "_free";
  next_id = 0;
  add_chain(free.lanes, path, next_id);
  free.target_past = blocked.target_past;
  free.gt_future = future_const_speed(path, s0, v, noise);
  free.meta = {{"template", "congestion"},
               {"variant", "free"},
               {"pair_id", base_id},
               {"speed", v}};

  apply_pose(blocked, pose);
  apply_pose(free, pose);
  return {std::move(blocked), std::move(free)};
}

}  // namespace

std::vector<Scene> gen_synthetic(const GenOptions& options, std::uint64_t seed) {
  std::vector<Scene> scenes;
  int draw_index = 0;
  for (const auto& [name, count] : options.mix) {
    if (count < 0) throw std::invalid_argument("gen_synthetic: negative count");
    for (int i = 0; i < count; ++i, ++draw_index) {
      Rng rng(fnv1a(name) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x1000ULL * draw_index));
      char tag[32];
      std::snprintf(tag, sizeof tag, "%s_%04d", name.c_str(), i);
      if (name == "straight") {
        scenes.push_back(make_straight(rng, tag));
      } else if (name == "curve") {
        scenes.push_back(make_curve(rng, tag));
      } else if (name == "fork") {
        scenes.push_back(make_fork(rng, tag));
      } else if (name == "intersection") {
        scenes.push_back(make_intersection(rng, tag));
      } else if (name == "congestion") {
        auto [blocked, free] = make_congestion_pair(rng, tag);
        scenes.push_back(std::move(blocked));
        scenes.push_back(std::move(free));
      } else {
        throw std::invalid_argument("gen_synthetic: unknown template '" + name + "'");
      }
      scenes.back().validate();
    }
  }
  return scenes;
}

}  // namespace lanecast::map
