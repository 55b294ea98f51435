#include "lanecast/lane_fusion.hpp"

#include <algorithm>
#include <numeric>

namespace lanecast::model {

RelatednessMap relatedness(const Polyline& proposal,
                           const std::vector<Rollout>& rollouts,
                           double threshold) {
  if (threshold <= 0.0)
    throw std::invalid_argument("relatedness: threshold must be positive");
  RelatednessMap rel;
  rel.h_nodes = static_cast<int>(proposal.nodes.size());
  rel.m_agents = static_cast<int>(rollouts.size());
  rel.related.assign(static_cast<std::size_t>(rel.h_nodes) * rel.m_agents, 0);
  rel.min_dist.assign(rel.related.size(),
                      std::numeric_limits<double>::infinity());
  for (int h = 0; h < rel.h_nodes; ++h) {
    const Vec2 node = proposal.nodes[static_cast<std::size_t>(h)];
    for (int j = 0; j < rel.m_agents; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& p : rollouts[static_cast<std::size_t>(j)].points)
        best = std::min(best, (p - node).norm());
      const std::size_t at = static_cast<std::size_t>(h) * rel.m_agents + j;
      rel.min_dist[at] = best;
      rel.related[at] = best < threshold ? 1 : 0;
    }
  }
  return rel;
}

std::vector<int> canonical_agent_order(
    const std::vector<std::vector<Vec2>>& pasts) {
  std::vector<int> order(pasts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = pasts[static_cast<std::size_t>(a)];
    const auto& pb = pasts[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < std::min(pa.size(), pb.size()); ++i) {
      if (pa[i].x != pb[i].x) return pa[i].x < pb[i].x;
      if (pa[i].y != pb[i].y) return pa[i].y < pb[i].y;
    }
    return pa.size() < pb.size();
  });
  return order;
}

Var fuse_social_into_lane(Graph& g, const Model& m, const Bound& b,
                          Var lane_feats, Var social,
                          const RelatednessMap& rel, const Polyline& proposal,
                          const std::vector<Vec2>& agent_positions,
                          const std::vector<int>& agent_order) {
  const int h_nodes = rel.h_nodes;
  Var pre = lane_feats;

  // Related (node, agent) pairs in canonical order: nodes ascending, agents
  // by canonical rank. The fixed order keeps the nodewise sums bit-identical
  // under agent permutation.
  std::vector<int> pair_node, pair_agent;
  if (social.valid()) {
    for (int h = 0; h < h_nodes; ++h)
      for (int j : agent_order)
        if (rel.is_related(h, j)) {
          pair_node.push_back(h);
          pair_agent.push_back(j);
        }
  }

  if (!pair_node.empty()) {
    const int p = static_cast<int>(pair_node.size());
    std::vector<double> diffs;
    diffs.reserve(static_cast<std::size_t>(p) * 2);
    for (int i = 0; i < p; ++i) {
      const Vec2 node = proposal.nodes[static_cast<std::size_t>(pair_node[i])];
      const Vec2 agent = agent_positions[static_cast<std::size_t>(pair_agent[i])];
      diffs.push_back(m.cfg.coord_scale * (node.x - agent.x));
      diffs.push_back(m.cfg.coord_scale * (node.y - agent.y));
    }
    Var dist_feat = nn::mlp2(g, g.constant(p, 2, diffs), b.lin(m.s2l_dist1),
                             b.lin(m.s2l_dist2));
    Var node_rows = g.gather_rows(lane_feats, pair_node);
    Var agent_rows = g.gather_rows(social, pair_agent);
    std::vector<Var> parts{node_rows, dist_feat, agent_rows};
    Var agg = nn::mlp2(g, g.concat_cols(parts), b.lin(m.s2l_agg1),
                       b.lin(m.s2l_agg2));
    Var sums = g.scatter_add_rows(agg, pair_node, h_nodes);
    pre = g.add(lane_feats, sums);
  }

  return nn::mlp2(g, pre, b.lin(m.s2l_res1), b.lin(m.s2l_res2));
}

Var lane_message_pass(Graph& g, const Model& m, const Bound& b, Var fused) {
  Var h1 = g.relu(g.conv1d_same(fused, b[m.s2l_mp1.w], b[m.s2l_mp1.b], 3));
  Var h2 = g.conv1d_same(h1, b[m.s2l_mp2.w], b[m.s2l_mp2.b], 3);
  return g.add(fused, h2);
}

}  // namespace lanecast::model
