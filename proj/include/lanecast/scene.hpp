#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanecast/geometry.hpp"

namespace lanecast::map {

using geom::Polyline;
using geom::Vec2;

constexpr int kPastSteps = 20;    // 2 s of history at 10 Hz
constexpr int kFutureSteps = 30;  // 3 s horizon at 10 Hz
constexpr double kDt = 0.1;

// Lane centerline segments and their connectivity. Successor segments begin
// within 0.5 m of the parent's last node; successor/predecessor relations
// are mutually consistent.
struct LaneGraph {
  std::map<int, Polyline> segments;
  std::map<int, std::vector<int>> successors;
  std::map<int, std::vector<int>> predecessors;
  std::map<int, int> left_neighbor;
  std::map<int, int> right_neighbor;

  void validate() const;  // throws on inconsistent connectivity
};

// One prediction instance.
struct Scene {
  std::string scene_id;
  std::vector<Vec2> target_past;               // kPastSteps points
  std::vector<std::vector<Vec2>> social_pasts; // M x kPastSteps
  LaneGraph lanes;
  std::optional<std::vector<Vec2>> gt_future;  // kFutureSteps points
  nlohmann::json meta;                         // optional generator annotations

  void validate() const;
};

// A drivable path resampled to H equally spaced nodes.
struct LaneProposal {
  Polyline nodes;
  std::vector<int> source_segment_ids;
};

// Rigid world -> agent transform: rotate by the row pair (c, s) after
// shifting by -t. Built so that the target sits at the origin heading +x.
struct AgentFrame {
  Vec2 translation;  // target position at t = 0
  double c = 1.0;    // cos of the target heading
  double s = 0.0;    // sin of the target heading

  Vec2 to_agent(Vec2 p) const {
    const Vec2 d = p - translation;
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
  }
  Vec2 to_world(Vec2 p) const {
    return {c * p.x - s * p.y + translation.x,
            s * p.x + c * p.y + translation.y};
  }
};

struct NormalizedScene {
  Scene scene;       // all coordinates in the agent frame
  AgentFrame frame;  // the transform that was applied
};

// Depth-first expansion of drivable paths from the segments nearest the
// target, following successors to at least the look-ahead length, branching
// at forks and seeding extra proposals from left/right neighbors of the
// start segments. Throws "off-map scene" when no segment lies within 25 m.
std::vector<LaneProposal> extract_lane_proposals(const Scene& scene, int h,
                                                 int max_n);

NormalizedScene to_agent_frame(const Scene& scene);

}  // namespace lanecast::map
