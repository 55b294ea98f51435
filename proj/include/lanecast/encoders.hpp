#pragma once

#include <vector>

#include "lanecast/geometry.hpp"
#include "lanecast/model_params.hpp"

namespace lanecast::model {

using geom::Polyline;
using geom::Vec2;

// Multi-scale 1D convolution (kernels 3/5/7, d/2 channels each) followed by a
// linear projection to width d, relu activations throughout.
Var multi_scale_conv(Graph& g, const Bound& b, const MultiScaleIdx& idx, Var x);

// Target history -> per-step features [Tp x d]. Input channels per step are
// (x, y, dx, dy), coordinate-scaled.
Var encode_target(Graph& g, const Model& m, const Bound& b,
                  const std::vector<Vec2>& past);

// Social histories -> one feature per agent [M x d] (final GRU state).
// Returns an invalid Var when there are no agents.
Var encode_social(Graph& g, const Model& m, const Bound& b,
                  const std::vector<std::vector<Vec2>>& pasts);

// Lane proposal nodes -> per-node features [H x d]. Channels are
// (x, y, sin tangent, cos tangent).
Var encode_lane(Graph& g, const Model& m, const Bound& b, const Polyline& prop);

}  // namespace lanecast::model
