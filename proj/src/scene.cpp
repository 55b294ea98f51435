#include "lanecast/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lanecast::map {

namespace {

constexpr double kOnMapRadius = 25.0;
constexpr double kLookAhead = 100.0;
constexpr double kTrimBack = 10.0;
constexpr double kJointTolerance = 0.5;
constexpr double kDedupShare = 0.8;
constexpr int kMaxPathSegments = 64;

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double segment_distance(const Polyline& poly, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& n : poly.nodes) best = std::min(best, (n - p).norm());
  return best;
}

// Suffix of poly starting at arc position s0 (interpolated first node).
Polyline cut_from_arc(const Polyline& poly, double s0) {
  if (s0 <= 0.0) return poly;
  Polyline out;
  double cum = 0.0;
  for (std::size_t i = 1; i < poly.nodes.size(); ++i) {
    const double seg = (poly.nodes[i] - poly.nodes[i - 1]).norm();
    if (out.nodes.empty()) {
      if (cum + seg >= s0) {
        const double u = seg > 0.0 ? (s0 - cum) / seg : 0.0;
        const Vec2 start =
            poly.nodes[i - 1] + (poly.nodes[i] - poly.nodes[i - 1]) * u;
        out.nodes.push_back(start);
        if ((poly.nodes[i] - start).norm() > 1e-9)
          out.nodes.push_back(poly.nodes[i]);
      }
    } else {
      out.nodes.push_back(poly.nodes[i]);
    }
    cum += seg;
  }
  if (out.nodes.size() < 2) {
    // cut landed on the very end; keep the final segment
    out.nodes = {poly.nodes[poly.nodes.size() - 2], poly.nodes.back()};
  }
  return out;
}

struct PathCandidate {
  std::vector<int> segment_ids;
  double start_distance = 0.0;
  double trim_arc = 0.0;  // arc position on the concatenated path to cut at
};

void append_segment(Polyline& path, const Polyline& seg) {
  for (const Vec2& n : seg.nodes) {
    if (!path.nodes.empty() && (n - path.nodes.back()).norm() <= 1e-9) continue;
    path.nodes.push_back(n);
  }
}

}  // namespace

void LaneGraph::validate() const {
  for (const auto& [id, succs] : successors) {
    if (!segments.contains(id))
      throw std::invalid_argument("LaneGraph: successor list for unknown segment " +
                                  std::to_string(id));
    for (int s : succs) {
      if (!segments.contains(s))
        throw std::invalid_argument("LaneGraph: unknown successor " +
                                    std::to_string(s));
      auto it = predecessors.find(s);
      const bool mutual =
          it != predecessors.end() &&
          std::find(it->second.begin(), it->second.end(), id) != it->second.end();
      if (!mutual)
        throw std::invalid_argument(
            "LaneGraph: successor " + std::to_string(id) + " -> " +
            std::to_string(s) + " has no matching predecessor entry");
      const Vec2 tail = segments.at(id).nodes.back();
      const Vec2 head = segments.at(s).nodes.front();
      if ((head - tail).norm() > kJointTolerance)
        throw std::invalid_argument("LaneGraph: successor " + std::to_string(s) +
                                    " does not start at the end of " +
                                    std::to_string(id));
    }
  }
  for (const auto& [id, preds] : predecessors) {
    for (int p : preds) {
      auto it = successors.find(p);
      const bool mutual =
          it != successors.end() &&
          std::find(it->second.begin(), it->second.end(), id) != it->second.end();
      if (!mutual)
        throw std::invalid_argument(
            "LaneGraph: predecessor " + std::to_string(id) + " <- " +
            std::to_string(p) + " has no matching successor entry");
    }
  }
  for (const auto& [id, poly] : segments) {
    (void)id;
    poly.validate();
  }
}

void Scene::validate() const {
  if (static_cast<int>(target_past.size()) != kPastSteps)
    throw std::invalid_argument("Scene " + scene_id + ": target_past must have " +
                                std::to_string(kPastSteps) + " points");
  for (const Vec2& p : target_past)
    if (!finite(p))
      throw std::invalid_argument("Scene " + scene_id + ": non-finite coordinate");
  for (const auto& sp : social_pasts) {
    if (static_cast<int>(sp.size()) != kPastSteps)
      throw std::invalid_argument("Scene " + scene_id +
                                  ": social past must have " +
                                  std::to_string(kPastSteps) + " points");
    for (const Vec2& p : sp)
      if (!finite(p))
        throw std::invalid_argument("Scene " + scene_id + ": non-finite coordinate");
  }
  if (gt_future) {
    if (static_cast<int>(gt_future->size()) != kFutureSteps)
      throw std::invalid_argument("Scene " + scene_id + ": gt_future must have " +
                                  std::to_string(kFutureSteps) + " points");
    for (const Vec2& p : *gt_future)
      if (!finite(p))
        throw std::invalid_argument("Scene " + scene_id + ": non-finite coordinate");
  }
  lanes.validate();
}

std::vector<LaneProposal> extract_lane_proposals(const Scene& scene, int h,
                                                 int max_n) {
  if (scene.lanes.segments.empty())
    throw std::runtime_error("off-map scene: lane graph is empty");
  const Vec2 p0 = scene.target_past.back();

  // Segments close enough to anchor a proposal, nearest first.
  std::vector<std::pair<double, int>> near;
  for (const auto& [id, poly] : scene.lanes.segments) {
    const double d = segment_distance(poly, p0);
    if (d <= kOnMapRadius) near.push_back({d, id});
  }
  if (near.empty())
    throw std::runtime_error("off-map scene: no lane segment within 25 m");
  std::sort(near.begin(), near.end());

  std::vector<std::pair<double, int>> starts(
      near.begin(), near.begin() + std::min<std::size_t>(2, near.size()));

  // Left/right neighbors of the start segments seed additional proposals.
  for (const auto& [d, id] : std::vector(starts)) {
    (void)d;
    for (const auto& nbmap : {scene.lanes.left_neighbor, scene.lanes.right_neighbor}) {
      auto it = nbmap.find(id);
      if (it == nbmap.end()) continue;
      const int nb = it->second;
      if (!scene.lanes.segments.contains(nb)) continue;
      const bool seen = std::any_of(starts.begin(), starts.end(),
                                    [&](const auto& s) { return s.second == nb; });
      if (!seen)
        starts.push_back({segment_distance(scene.lanes.segments.at(nb), p0), nb});
    }
  }

  // Depth-first path expansion from every start.
  std::vector<PathCandidate> paths;
  for (const auto& [start_dist, start_id] : starts) {
    const Polyline& start_poly = scene.lanes.segments.at(start_id);
    const auto anchor = geom::nearest_node(start_poly, p0);
    double anchor_arc = 0.0;
    for (int i = 1; i <= anchor.index; ++i)
      anchor_arc += (start_poly.nodes[static_cast<std::size_t>(i)] -
                     start_poly.nodes[static_cast<std::size_t>(i - 1)])
                        .norm();
    const double trim_arc = std::max(0.0, anchor_arc - kTrimBack);
    const double needed = trim_arc + kLookAhead;

    struct Frame {
      std::vector<int> ids;
      double length;
    };
    std::vector<Frame> stack{{{start_id}, start_poly.length()}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      const int tail = f.ids.back();
      auto succ_it = scene.lanes.successors.find(tail);
      const bool can_extend = succ_it != scene.lanes.successors.end() &&
                              !succ_it->second.empty() &&
                              static_cast<int>(f.ids.size()) < kMaxPathSegments;
      if (f.length >= needed || !can_extend) {
        paths.push_back({f.ids, start_dist, trim_arc});
        continue;
      }
      std::vector<int> succs = succ_it->second;
      std::sort(succs.begin(), succs.end());
      for (int s : succs) {
        if (std::find(f.ids.begin(), f.ids.end(), s) != f.ids.end()) continue;
        Frame next = f;
        next.ids.push_back(s);
        next.length += scene.lanes.segments.at(s).length();
        stack.push_back(std::move(next));
      }
    }
  }

  // Stable order: ascending start distance, then discovery order.
  std::stable_sort(paths.begin(), paths.end(),
                   [](const PathCandidate& a, const PathCandidate& b) {
                     return a.start_distance < b.start_distance;
                   });

  // Deduplicate: two paths sharing more than 80% of segment ids keep the first.
  std::vector<PathCandidate> kept;
  for (const auto& cand : paths) {
    const std::set<int> cset(cand.segment_ids.begin(), cand.segment_ids.end());
    bool dup = false;
    for (const auto& prev : kept) {
      const std::set<int> pset(prev.segment_ids.begin(), prev.segment_ids.end());
      std::size_t common = 0;
      for (int id : cset) common += pset.contains(id) ? 1 : 0;
      const double share = static_cast<double>(common) /
                           static_cast<double>(std::min(cset.size(), pset.size()));
      if (share > kDedupShare) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(cand);
    if (static_cast<int>(kept.size()) >= max_n) break;
  }

  std::vector<LaneProposal> out;
  for (const auto& cand : kept) {
    Polyline path;
    for (int id : cand.segment_ids)
      append_segment(path, scene.lanes.segments.at(id));
    Polyline trimmed = cut_from_arc(path, cand.trim_arc);
    LaneProposal prop;
    prop.nodes = geom::resample(trimmed, h);
    prop.source_segment_ids = cand.segment_ids;
    out.push_back(std::move(prop));
  }
  return out;
}

NormalizedScene to_agent_frame(const Scene& scene) {
  AgentFrame frame;
  frame.translation = scene.target_past.back();
  frame.c = 1.0;
  frame.s = 0.0;
  for (std::size_t k = scene.target_past.size() - 1; k >= 1; --k) {
    const Vec2 d = scene.target_past[k] - scene.target_past[k - 1];
    const double r = d.norm();
    if (r >= 1e-6) {
      frame.c = d.x / r;
      frame.s = d.y / r;
      break;
    }
  }

  NormalizedScene out;
  out.frame = frame;
  out.scene = scene;
  for (Vec2& p : out.scene.target_past) p = frame.to_agent(p);
  for (auto& sp : out.scene.social_pasts)
    for (Vec2& p : sp) p = frame.to_agent(p);
  for (auto& [id, poly] : out.scene.lanes.segments) {
    (void)id;
    for (Vec2& p : poly.nodes) p = frame.to_agent(p);
  }
  if (out.scene.gt_future)
    for (Vec2& p : *out.scene.gt_future) p = frame.to_agent(p);
  return out;
}

}  // namespace lanecast::map
