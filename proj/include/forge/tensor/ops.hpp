#pragma once

#include <vector>

#include "forge/tensor/tensor.hpp"

// Differentiable tensor operations. Rank-1 tensors behave as a single row wherever an op
// works row-wise. Ops throw forge::DimensionError on incompatible shapes.
namespace forge::tensor {

/// x · wᵀ for x [b × in], w [out × in].
Tensor matmul_nt(const Tensor& x, const Tensor& w);
/// Adds bias [n] to every row of x [b × n].
Tensor add_row_vector(const Tensor& x, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
/// Pass-through inside [lo, hi], constant (zero gradient) outside.
Tensor clamp(const Tensor& x, double lo, double hi);

/// Row-wise softmax with max subtraction. Rejects non-finite input.
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);
/// Row-wise log Σ exp, result [b × 1].
Tensor logsumexp_rows(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum across columns: [b × n] → [b × 1].
Tensor sum_cols(const Tensor& x);
/// Sums consecutive column blocks of width `group`: [b × k·group] → [b × k].
Tensor group_sum_cols(const Tensor& x, std::size_t group);
/// Repeats the columns `times`: [b × n] → [b × times·n].
Tensor tile_cols(const Tensor& x, std::size_t times);
/// Repeats each column `times` consecutively: [b × n] → [b × n·times].
Tensor repeat_cols(const Tensor& x, std::size_t times);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
/// Rows [start, start+count) of a rank-2 tensor.
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);
Tensor reshape(const Tensor& x, Shape shape);

}  // namespace forge::tensor
