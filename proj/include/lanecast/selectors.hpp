#pragma once

#include <vector>

#include "lanecast/lane_attention.hpp"
#include "lanecast/model_params.hpp"
#include "lanecast/scene.hpp"

namespace lanecast::model {

using map::LaneProposal;

// Shared two-layer MLP over the N encoder hiddens, softmax over lanes.
// Returns a [1 x N] probability row.
Var lane_selector(Graph& g, const Model& m, const Bound& b,
                  const std::vector<Var>& lane_hiddens, ForwardTrace* trace);

// Scores a lane's K decoded trajectories from (flattened offsets || lane
// hidden), softmax over the K heads. Returns a [1 x K] probability row.
Var trajectory_selector(Graph& g, const Model& m, const Bound& b,
                        const DecodeResult& decoded, Var lane_hidden,
                        ForwardTrace* trace);

// Self-supervised label distributions (softmax of negated distances):
// lanes use the time-weighted distance sum_t t * min_h |y_t - l_h|,
// trajectories use sum_t |y_t - yhat_t|.
struct LabelSet {
  std::vector<double> lane;
  std::vector<double> traj;
};

std::vector<double> lane_distance_weights(
    const std::vector<LaneProposal>& proposals, const std::vector<Vec2>& gt);

LabelSet make_labels(const std::vector<LaneProposal>& proposals,
                     const std::vector<std::vector<Vec2>>& trajectories,
                     const std::vector<Vec2>& gt);

// Numerically stable softmax of a plain vector.
std::vector<double> stable_softmax(const std::vector<double>& logits);

double entropy(const std::vector<double>& probs);

// Winner-take-all regression plus the two classification terms:
//   total = reg + lambda1 * lane_ce + lambda2 * traj_ce
// reg is the best head's mean per-step l1 distance to the ground truth.
struct LossTerms {
  Var total;
  Var reg;
  Var lane_ce;
  Var traj_ce;
  int winner_head = -1;
};

LossTerms total_loss(Graph& g, const DecodeResult& decoded, Var lane_probs,
                     Var traj_probs, const LabelSet& labels,
                     const std::vector<Vec2>& gt, double lambda1,
                     double lambda2);

// Final K trajectories with normalized probabilities.
struct PredictionSet {
  std::vector<std::vector<Vec2>> trajectories;  // K x Tf
  std::vector<double> probabilities;            // K, sums to 1
  std::vector<std::pair<int, int>> sources;     // (lane, head) per pick
  bool short_set = false;  // fewer candidates than requested
};

// Multiplies lane and per-lane trajectory probabilities, keeps the global
// top k by the product (ties by lane then head index) and renormalizes.
PredictionSet combine_and_pick(
    const std::vector<double>& lane_probs,
    const std::vector<std::vector<double>>& traj_probs,
    const std::vector<std::vector<std::vector<Vec2>>>& trajectories, int k);

}  // namespace lanecast::model
