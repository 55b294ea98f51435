#pragma once

#include <cstdint>
#include <vector>

#include "lanecast/graph.hpp"
#include "lanecast/nn.hpp"
#include "lanecast/tensor.hpp"

namespace lanecast::model {

using ad::Graph;
using ad::Var;

struct ModelConfig {
  int d = 64;              // feature width everywhere
  int h_nodes = 50;        // nodes per lane proposal
  int max_n = 10;          // proposal cap
  int k_heads = 6;         // trajectory hypotheses per lane
  double s2l_threshold = 7.5;  // meters, social-to-lane relatedness
  double coord_scale = 0.1;    // fixed scale on meter-valued model inputs
  double lambda1 = 1.0;        // lane classification weight
  double lambda2 = 1.0;        // trajectory classification weight

  int tp() const { return 20; }
  int tf() const { return 30; }
};

struct LinearIdx {
  int w = -1, b = -1;
};
struct GruIdx {
  int wx = -1, wh = -1, bx = -1, bh = -1;
};
struct ConvIdx {
  int w = -1, b = -1;
  int ksize = 0;
};
struct MultiScaleIdx {
  ConvIdx k3, k5, k7;
  LinearIdx proj;
};

// All learned weights, registered once; graphs bind copies per forward pass.
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  ModelConfig cfg;
  ParamStore params;
  std::uint64_t seed = 0;

  // encoders
  MultiScaleIdx target_enc;
  MultiScaleIdx social_enc;
  GruIdx social_gru;
  MultiScaleIdx lane_enc;

  // social-to-lane fusion
  LinearIdx s2l_dist1, s2l_dist2;
  LinearIdx s2l_agg1, s2l_agg2;
  LinearIdx s2l_res1, s2l_res2;
  ConvIdx s2l_mp1, s2l_mp2;

  // recurrent lane attention
  GruIdx wp_gru0, wp_gru1;
  LinearIdx wp_head1, wp_head2;
  GruIdx next_gru0, next_gru1;
  int attn_wq = -1, attn_wk = -1, attn_wv = -1;
  LinearIdx rmlp1, rmlp2;
  int e_lane = -1, e_rel = -1, e_bias = -1;
  int dec_token = -1;
  LinearIdx pred_trunk;
  std::vector<LinearIdx> pred_heads;  // k_heads entries

  // selectors
  LinearIdx lane_sel1, lane_sel2;
  LinearIdx traj_sel1, traj_sel2;
};

// Parameter leaves bound into one graph, aligned with the ParamStore.
struct Bound {
  std::vector<Var> vars;

  Var operator[](int idx) const { return vars[static_cast<std::size_t>(idx)]; }
  nn::Linear lin(const LinearIdx& i) const { return {vars[i.w], vars[i.b]}; }
  nn::GruLayer gru(const GruIdx& i, int dim) const {
    return {vars[i.wx], vars[i.wh], vars[i.bx], vars[i.bh], dim};
  }
};

// Binds every parameter as a leaf of g. Does not touch the model, so scenes
// may bind the same model from parallel threads, each into its own graph.
Bound bind_params(Graph& g, const Model& m);

}  // namespace lanecast::model
