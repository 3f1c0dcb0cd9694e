#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "forge/tensor/nn.hpp"
#include "forge/tensor/tensor.hpp"

namespace forge::testing {

struct GradCheckResult {
  double max_relative_deviation = 0.0;
  std::size_t checked = 0;
};

// Central finite differences against the tape. `loss` must build a fresh graph on each call.
// Relative deviation uses a floor of 1e-5 on the denominator so entries whose true gradient
// is essentially zero are compared absolutely.
inline GradCheckResult gradient_check(std::vector<tensor::Tensor> params,
                                      const std::function<tensor::Tensor()>& loss,
                                      double step = 1e-5, std::size_t stride = 1) {
  tensor::zero_grads(params);
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.size(), 0.0);
    }
  }
  tensor::zero_grads(params);

  GradCheckResult result;
  tensor::NoGradGuard guard;
  std::size_t counter = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if ((counter++ % stride) != 0) continue;
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss().item();
      values[i] = saved - step;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-5});
      result.max_relative_deviation = std::max(result.max_relative_deviation, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace forge::testing
