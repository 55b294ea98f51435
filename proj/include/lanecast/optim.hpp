#pragma once

#include <cstdint>
#include <vector>

#include "lanecast/tensor.hpp"

namespace lanecast {

// Adaptive-moment optimizer state; moment buffers are aligned with the
// ParamStore registration order.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const ParamStore& params);
};

// Gradients aligned with the ParamStore; an empty inner vector means the
// gradient for that parameter is missing (which is an error).
using GradBuffers = std::vector<std::vector<double>>;

GradBuffers make_grad_buffers(const ParamStore& params);

// One adaptive-moment update over every parameter. Throws if any parameter
// has no gradient buffer or the shapes disagree.
void adam_step(ParamStore& params, const GradBuffers& grads, AdamState& state);

}  // namespace lanecast
