#include "lanecast/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace lanecast {

void AdamState::init(const ParamStore& params) {
  step = 0;
  m.assign(params.count(), {});
  v.assign(params.count(), {});
  for (std::size_t i = 0; i < params.count(); ++i) {
    m[i].assign(params.at(static_cast<int>(i)).size(), 0.0);
    v[i].assign(params.at(static_cast<int>(i)).size(), 0.0);
  }
}

GradBuffers make_grad_buffers(const ParamStore& params) {
  GradBuffers g(params.count());
  for (std::size_t i = 0; i < params.count(); ++i)
    g[i].assign(params.at(static_cast<int>(i)).size(), 0.0);
  return g;
}

void adam_step(ParamStore& params, const GradBuffers& grads, AdamState& state) {
  if (grads.size() != params.count() || state.m.size() != params.count())
    throw std::invalid_argument("adam_step: gradient/state not aligned with parameters");
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Tensor& t = params.at(static_cast<int>(i));
    if (grads[i].size() != t.size())
      throw std::invalid_argument("adam_step: missing gradient for parameter '" +
                                  params.name_of(static_cast<int>(i)) + "'");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.count(); ++i) {
    Tensor& t = params.at(static_cast<int>(i));
    auto& mi = state.m[i];
    auto& vi = state.v[i];
    const auto& gi = grads[i];
    for (std::size_t j = 0; j < t.values.size(); ++j) {
      mi[j] = state.beta1 * mi[j] + (1.0 - state.beta1) * gi[j];
      vi[j] = state.beta2 * vi[j] + (1.0 - state.beta2) * gi[j] * gi[j];
      const double mhat = mi[j] / bc1;
      const double vhat = vi[j] / bc2;
      t.values[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace lanecast
