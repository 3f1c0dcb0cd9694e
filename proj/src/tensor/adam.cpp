#include "forge/tensor/adam.hpp"

#include <cmath>
#include <string>

#include "forge/common/errors.hpp"
#include "forge/tensor/nn.hpp"

namespace forge::tensor {

AdamState AdamState::fresh(std::size_t n, double lr) {
  AdamState s;
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw DimensionError("adam_step: params " + std::to_string(n) + ", grads " +
                         std::to_string(grads.size()) + ", moments " +
                         std::to_string(state.first_moment.size()) + "/" +
                         std::to_string(state.second_moment.size()));
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr)
    : params_(std::move(params)), state_(AdamState::fresh(parameter_count(params_), lr)) {}

void AdamOptimizer::step() {
  std::vector<double> flat = flatten_values(params_);
  const std::vector<double> grads = flatten_grads(params_);
  adam_step(state_, flat, grads);
  assign_values(params_, flat);
  zero_grad();
}

void AdamOptimizer::zero_grad() { zero_grads(params_); }

}  // namespace forge::tensor
