#pragma once

#include <vector>

#include "lanecast/geometry.hpp"
#include "lanecast/model_params.hpp"
#include "lanecast/scene.hpp"

namespace lanecast::model {

using geom::Polyline;
using geom::Rollout;
using geom::Vec2;
using map::LaneProposal;

// Per (lane node, social agent) relatedness: an agent is related to a node
// when the minimum distance from any of its rollout points to the node is
// below the threshold.
struct RelatednessMap {
  int h_nodes = 0;
  int m_agents = 0;
  std::vector<char> related;     // h * m_agents + j
  std::vector<double> min_dist;  // same layout

  bool is_related(int h, int j) const {
    return related[static_cast<std::size_t>(h) * m_agents + j] != 0;
  }
  double distance(int h, int j) const {
    return min_dist[static_cast<std::size_t>(h) * m_agents + j];
  }
};

RelatednessMap relatedness(const Polyline& proposal,
                           const std::vector<Rollout>& rollouts,
                           double threshold);

// Canonical processing order of the agents: sorted by their full past
// trajectory, so that nodewise sums are bit-identical under any permutation
// of the input agents.
std::vector<int> canonical_agent_order(
    const std::vector<std::vector<Vec2>>& pasts);

// Spatial-attention fusion of related social features into lane node
// features. For each node h:
//   fused_h = phi_res(l_h + sum_{j related} phi_agg(l_h || dist_hj || s_j))
// where dist_hj is an MLP of the raw node-minus-agent coordinate difference.
// social may be invalid (no agents); agent_positions are current positions.
Var fuse_social_into_lane(Graph& g, const Model& m, const Bound& b,
                          Var lane_feats, Var social,
                          const RelatednessMap& rel, const Polyline& proposal,
                          const std::vector<Vec2>& agent_positions,
                          const std::vector<int>& agent_order);

// Message passing along the lane: two kernel-3 convolutions with a residual
// connection, so node h only depends on fused nodes within h +- 2.
Var lane_message_pass(Graph& g, const Model& m, const Bound& b, Var fused);

}  // namespace lanecast::model
