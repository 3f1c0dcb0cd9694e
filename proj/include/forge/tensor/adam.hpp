#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/tensor/tensor.hpp"

namespace forge::tensor {

struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(std::size_t n, double lr = 1e-3);
};

/// Bias-corrected Adam update in place. Throws DimensionError on length mismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Adam over a fixed list of parameter tensors, laid out back to back.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::vector<Tensor> params, double lr);

  /// Applies one update from the tensors' accumulated gradients, then clears them.
  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  void set_lr(double lr) { state_.lr = lr; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace forge::tensor
