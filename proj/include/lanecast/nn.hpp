#pragma once

#include "lanecast/graph.hpp"

namespace lanecast::nn {

using ad::Graph;
using ad::Var;

struct Linear {
  Var w;  // [in x out]
  Var b;  // [1 x out]
};

inline Var linear(Graph& g, Var x, const Linear& l) {
  return g.add_bias(g.matmul(x, l.w), l.b);
}

// Two-layer perceptron: second(relu(first(x))).
inline Var mlp2(Graph& g, Var x, const Linear& first, const Linear& second) {
  return linear(g, g.relu(linear(g, x, first)), second);
}

struct GruLayer {
  Var wx;  // [in x 3*dim], gate order r, z, n
  Var wh;  // [dim x 3*dim]
  Var bx;  // [1 x 3*dim]
  Var bh;  // [1 x 3*dim]
  int dim = 0;
};

// Standard GRU cell with sigmoid reset/update gates and tanh candidate:
//   r = sig(xg_r + hg_r), z = sig(xg_z + hg_z),
//   n = tanh(xg_n + r * hg_n), h' = (1 - z) * n + z * h.
// x is [b x in], h is [b x dim]; returns [b x dim].
Var gru_cell(Graph& g, Var x, Var h, const GruLayer& p);

}  // namespace lanecast::nn
