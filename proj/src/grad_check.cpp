#include "lanecast/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace lanecast::ad {

namespace {

double eval_loss(const LossBuilder& builder, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs)
    vars.push_back(g.input(t.rows(), t.cols(), t.values, false));
  Var loss = builder(g, vars);
  const double v = g.value_scalar(loss);
  if (!std::isfinite(v))
    throw std::runtime_error("grad_check: non-finite loss value");
  return v;
}

}  // namespace

double grad_check(const LossBuilder& builder, std::vector<Tensor> inputs,
                  double eps) {
  if (!(eps > 0.0 && eps <= 1e-3))
    throw std::invalid_argument("grad_check: eps must be in (0, 1e-3]");

  // Analytic pass.
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (Tensor& t : inputs)
    vars.push_back(g.input(t.rows(), t.cols(), t.values, true));
  Var loss = builder(g, vars);
  if (!std::isfinite(g.value_scalar(loss)))
    throw std::runtime_error("grad_check: non-finite loss value");
  g.backward(loss);

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto analytic = g.grad(vars[i]);
    if (analytic.empty())
      throw std::runtime_error("grad_check: input received no gradient buffer");
    for (std::size_t j = 0; j < inputs[i].values.size(); ++j) {
      if (!std::isfinite(analytic[j]))
        throw std::runtime_error("grad_check: non-finite analytic gradient");
      const double keep = inputs[i].values[j];
      inputs[i].values[j] = keep + eps;
      const double up = eval_loss(builder, inputs);
      inputs[i].values[j] = keep - eps;
      const double down = eval_loss(builder, inputs);
      inputs[i].values[j] = keep;
      const double fd = (up - down) / (2.0 * eps);
      if (!std::isfinite(fd))
        throw std::runtime_error("grad_check: non-finite finite difference");
      const double err =
          std::abs(analytic[j] - fd) / std::max(1.0, std::abs(analytic[j]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace lanecast::ad
