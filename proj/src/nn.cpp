#include "lanecast/nn.hpp"

namespace lanecast::nn {

Var gru_cell(Graph& g, Var x, Var h, const GruLayer& p) {
  const int d = p.dim;
  Var xg = g.add_bias(g.matmul(x, p.wx), p.bx);  // [b x 3d]
  Var hg = g.add_bias(g.matmul(h, p.wh), p.bh);
  Var r = g.sigmoid(g.add(g.slice_cols(xg, 0, d), g.slice_cols(hg, 0, d)));
  Var z = g.sigmoid(
      g.add(g.slice_cols(xg, d, 2 * d), g.slice_cols(hg, d, 2 * d)));
  Var n = g.tanh(g.add(g.slice_cols(xg, 2 * d, 3 * d),
                       g.mul(r, g.slice_cols(hg, 2 * d, 3 * d))));
  return g.add(g.mul(g.affine(z, -1.0, 1.0), n), g.mul(z, h));
}

}  // namespace lanecast::nn
