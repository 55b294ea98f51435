#include "lanecast/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanecast::model {

Var lane_selector(Graph& g, const Model& m, const Bound& b,
                  const std::vector<Var>& lane_hiddens, ForwardTrace* trace) {
  if (lane_hiddens.empty())
    throw std::invalid_argument("lane_selector: no lanes");
  Var stacked = g.concat_rows(lane_hiddens);  // [N x d]
  Var scores = nn::mlp2(g, stacked, b.lin(m.lane_sel1), b.lin(m.lane_sel2));
  Var probs = g.softmax_rows(
      g.reshape(scores, 1, static_cast<int>(lane_hiddens.size())));
  if (trace) trace->probability_rows.push_back(probs);
  return probs;
}

Var trajectory_selector(Graph& g, const Model& m, const Bound& b,
                        const DecodeResult& decoded, Var lane_hidden,
                        ForwardTrace* trace) {
  const int k_heads = static_cast<int>(decoded.trajectories.size());
  std::vector<Var> scores;
  scores.reserve(static_cast<std::size_t>(k_heads));
  for (int k = 0; k < k_heads; ++k) {
    std::vector<Var> parts;
    parts.reserve(decoded.step_offsets.size() + 1);
    for (const Var& step : decoded.step_offsets)
      parts.push_back(g.slice_rows(step, k, k + 1));
    parts.push_back(lane_hidden);
    Var features = g.concat_cols(parts);  // [1 x (2*Tf + d)]
    scores.push_back(
        nn::mlp2(g, features, b.lin(m.traj_sel1), b.lin(m.traj_sel2)));
  }
  Var probs = g.softmax_rows(g.concat_cols(scores));
  if (trace) trace->probability_rows.push_back(probs);
  return probs;
}

std::vector<double> stable_softmax(const std::vector<double>& logits) {
  if (logits.empty())
    throw std::invalid_argument("stable_softmax: softmax over empty axis");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::vector<double> lane_distance_weights(
    const std::vector<LaneProposal>& proposals, const std::vector<Vec2>& gt) {
  std::vector<double> d1(proposals.size(), 0.0);
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    for (std::size_t t = 0; t < gt.size(); ++t) {
      const double beta = static_cast<double>(t + 1);  // beta(t) = t
      d1[i] += beta * geom::nearest_node(proposals[i].nodes, gt[t]).distance;
    }
  }
  return d1;
}

LabelSet make_labels(const std::vector<LaneProposal>& proposals,
                     const std::vector<std::vector<Vec2>>& trajectories,
                     const std::vector<Vec2>& gt) {
  LabelSet labels;
  std::vector<double> d1 = lane_distance_weights(proposals, gt);
  for (double& v : d1) v = -v;
  labels.lane = stable_softmax(d1);

  std::vector<double> d2(trajectories.size(), 0.0);
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    for (std::size_t t = 0; t < gt.size(); ++t)
      d2[k] -= (trajectories[k][t] - gt[t]).norm();
  labels.traj = stable_softmax(d2);
  return labels;
}

LossTerms total_loss(Graph& g, const DecodeResult& decoded, Var lane_probs,
                     Var traj_probs, const LabelSet& labels,
                     const std::vector<Vec2>& gt, double lambda1,
                     double lambda2) {
  const int k_heads = static_cast<int>(decoded.trajectories.size());
  const int tf = static_cast<int>(gt.size());
  std::vector<double> gt_flat;
  gt_flat.reserve(static_cast<std::size_t>(tf) * 2);
  for (const Vec2& p : gt) {
    gt_flat.push_back(p.x);
    gt_flat.push_back(p.y);
  }
  Var gt_mat = g.constant(tf, 2, gt_flat);

  LossTerms out;
  Var best;
  double best_val = 0.0;
  for (int k = 0; k < k_heads; ++k) {
    std::vector<Var> rows;
    rows.reserve(static_cast<std::size_t>(tf));
    for (const Var& step : decoded.step_positions)
      rows.push_back(g.slice_rows(step, k, k + 1));
    Var dist = g.l1_distance(g.concat_rows(rows), gt_mat);
    const double v = g.value_scalar(dist);
    if (out.winner_head < 0 || v < best_val) {
      out.winner_head = k;
      best_val = v;
      best = dist;
    }
  }
  out.reg = g.scale(best, 1.0 / tf);

  out.lane_ce = g.cross_entropy(
      lane_probs, g.constant(1, static_cast<int>(labels.lane.size()), labels.lane));
  out.traj_ce = g.cross_entropy(
      traj_probs, g.constant(1, static_cast<int>(labels.traj.size()), labels.traj));
  out.total = g.add(out.reg, g.add(g.scale(out.lane_ce, lambda1),
                                   g.scale(out.traj_ce, lambda2)));
  return out;
}

PredictionSet combine_and_pick(
    const std::vector<double>& lane_probs,
    const std::vector<std::vector<double>>& traj_probs,
    const std::vector<std::vector<std::vector<Vec2>>>& trajectories, int k) {
  if (k < 1) throw std::invalid_argument("combine_and_pick: k must be >= 1");
  struct Candidate {
    double combined;
    int lane, head;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < lane_probs.size(); ++i)
    for (std::size_t j = 0; j < traj_probs[i].size(); ++j)
      cands.push_back({lane_probs[i] * traj_probs[i][j], static_cast<int>(i),
                       static_cast<int>(j)});
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    if (a.lane != b.lane) return a.lane < b.lane;
    return a.head < b.head;
  });

  PredictionSet out;
  out.short_set = static_cast<int>(cands.size()) < k;
  const int take = std::min<int>(k, static_cast<int>(cands.size()));
  double total = 0.0;
  for (int i = 0; i < take; ++i) total += cands[static_cast<std::size_t>(i)].combined;
  for (int i = 0; i < take; ++i) {
    const Candidate& c = cands[static_cast<std::size_t>(i)];
    out.trajectories.push_back(
        trajectories[static_cast<std::size_t>(c.lane)][static_cast<std::size_t>(c.head)]);
    out.probabilities.push_back(total > 0.0 ? c.combined / total
                                            : 1.0 / static_cast<double>(take));
    out.sources.push_back({c.lane, c.head});
  }
  return out;
}

}  // namespace lanecast::model
