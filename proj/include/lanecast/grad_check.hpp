#pragma once

#include <functional>
#include <vector>

#include "lanecast/graph.hpp"

namespace lanecast::ad {

// Builds a scalar loss from leaves bound in registration order.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

// Compares the analytic gradient of builder's loss against central finite
// differences for every coordinate of every input. Returns
//   max_i |analytic_i - fd_i| / max(1, |analytic_i|).
// eps must lie in (0, 1e-3]; inputs are expected to sit away from
// non-differentiable points (relu kinks, l1 ties) by more than 10*eps.
// Throws if any intermediate value or gradient is non-finite.
double grad_check(const LossBuilder& builder, std::vector<Tensor> inputs,
                  double eps);

}  // namespace lanecast::ad
