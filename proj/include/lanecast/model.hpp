#pragma once

#include <optional>
#include <string>

#include "lanecast/encoders.hpp"
#include "lanecast/lane_attention.hpp"
#include "lanecast/lane_fusion.hpp"
#include "lanecast/model_params.hpp"
#include "lanecast/scene.hpp"
#include "lanecast/selectors.hpp"

namespace lanecast::model {

using map::NormalizedScene;

// Everything the pipeline needs from one training forward pass.
struct TrainForward {
  bool skipped = false;
  std::string skip_reason;
  LossTerms loss;
  int trained_lane = -1;
  LabelSet labels;
  int n_lanes = 0;
  Bound bound;  // parameter leaves, for gradient extraction after backward
};

// Forward to the total loss on the most likely (label-argmax) lane. Scenes
// whose lane labels carry no signal (near-uniform over N >= 2 lanes) are
// skipped. The ground truth must be present.
TrainForward train_forward(Graph& g, const Model& m, const NormalizedScene& ns,
                           ForwardTrace* trace = nullptr);

struct ScoreSet {
  std::vector<double> lane;               // N lane probabilities
  std::vector<std::vector<double>> traj;  // N x K per-lane probabilities
};

struct InferResult {
  PredictionSet preds;  // agent-frame trajectories
  ScoreSet scores;
  int n_lanes = 0;
};

// Decodes every lane, scores all N x K candidates and keeps the top k.
InferResult infer(Graph& g, const Model& m, const NormalizedScene& ns, int k_pick,
                  ForwardTrace* trace = nullptr);

}  // namespace lanecast::model
