#pragma once

#include <array>
#include <vector>

#include "lanecast/geometry.hpp"
#include "lanecast/model_params.hpp"
#include "lanecast/scene.hpp"

namespace lanecast::model {

using geom::Polyline;
using geom::Vec2;

// Softmax rows recorded during a forward pass (attention weights, selector
// probabilities) so tests can audit normalization.
struct ForwardTrace {
  std::vector<Var> attention_rows;
  std::vector<Var> probability_rows;
};

// Per-lane inputs to the recurrent attention: geometry plus fused node
// features and the lane half of the window-feature projection, computed once
// per lane.
struct LaneContext {
  const Polyline* nodes = nullptr;
  std::vector<double> tangents;  // per-node direction
  Var features;                  // [H x d]
  Var attn_lane_part;            // [H x d] = features * W_e_lane
};

LaneContext make_lane_context(Graph& g, const Model& m, const Bound& b,
                              const Polyline& proposal, Var fused_features);

// Recurrent state: two-layer hidden stacks for the waypoint GRU and the
// next-point GRU, over a batch of rollouts.
struct RlaState {
  std::array<Var, 2> wp_hidden;    // each [B x d]
  std::array<Var, 2> next_hidden;  // each [B x d]
};

// Waypoint proposal for one step: updates the waypoint GRU stack from the
// previous positions (already coordinate-scaled) and emits look-ahead points
// in meters, shape [B x 2].
Var waypoint_step(Graph& g, const Model& m, const Bound& b, RlaState& state,
                  Var prev_scaled);

// Lane node window between the node nearest the current position and the
// node nearest the waypoint; indices are inclusive and swapped when the
// waypoint falls behind.
struct AttentionWindow {
  int first = 0;
  int last = 0;
};

AttentionWindow attention_window(const Polyline& lane, Vec2 a_prev, Vec2 waypoint);

// Scaled dot-product attention of one hidden row over the window's node
// features, with relative-position encodings mixed into keys and values:
//   E = relu(lane_part + MLP(D, dtheta) W_r + b),  K = E Wk, V = E Wv,
//   h~ = h + softmax(h Wq K^T / sqrt(d)) V.
Var lane_attention_row(Graph& g, const Model& m, const Bound& b, Var hidden_row,
                       const LaneContext& lane, Vec2 a_prev,
                       double agent_heading, AttentionWindow win,
                       ForwardTrace* trace);

// Runs the attention loop over the observed past (one rollout), feeding the
// per-step motion features as auxiliary GRU input. Returns the final state.
RlaState rla_encode(Graph& g, const Model& m, const Bound& b,
                    const LaneContext& lane, const std::vector<Vec2>& past,
                    Var motion_feats, ForwardTrace* trace = nullptr);

struct DecodeResult {
  // per step: positions and offsets of every head, each [K x 2]
  std::vector<Var> step_positions;
  std::vector<Var> step_offsets;
  std::vector<std::vector<Vec2>> trajectories;  // K x Tf numeric copies
};

// Autoregressive decoding: K heads share the recurrent trunk but emit their
// own offsets and feed their own predictions back, so the rollouts diverge.
DecodeResult rla_decode(Graph& g, const Model& m, const Bound& b,
                        const LaneContext& lane, const RlaState& encoded,
                        int k_heads, ForwardTrace* trace = nullptr);

}  // namespace lanecast::model
