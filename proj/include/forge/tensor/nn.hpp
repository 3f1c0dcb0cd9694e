#pragma once

#include <string>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/tensor/tensor.hpp"

namespace forge::tensor {

enum class Activation { identity, relu, softmax, exp };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Inputs to the exp activation are clamped to this range before exponentiation.
inline constexpr double kExpClampLo = -20.0;
inline constexpr double kExpClampHi = 20.0;

Tensor apply_activation(const Tensor& x, Activation a);

/// Fully connected layer: activation(x · Wᵀ + b).
struct DenseLayer {
  Tensor weights;  // [out × in]
  Tensor bias;     // [out]
  Activation activation = Activation::identity;

  std::size_t in_width() const { return weights.cols(); }
  std::size_t out_width() const { return weights.rows(); }

  /// Glorot-uniform weights in ±sqrt(6 / (in + out)), zero bias.
  static DenseLayer make(std::size_t in, std::size_t out, Activation activation, Rng& rng);
};

Tensor dense_forward(const DenseLayer& layer, const Tensor& input);

/// Stack of dense layers: ReLU on hidden layers, a chosen activation on the output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
      Activation output_activation, Rng& rng);

  Tensor forward(const Tensor& input) const;

  std::size_t in_width() const { return layers_.front().in_width(); }
  std::size_t out_width() const { return layers_.back().out_width(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Weight then bias for every layer, in order.
  std::vector<Tensor> parameters() const;
  /// Layer widths from input to output, e.g. {in, h1, h2, out}.
  std::vector<std::size_t> widths() const;

 private:
  std::vector<DenseLayer> layers_;
};

std::size_t parameter_count(const std::vector<Tensor>& params);
std::vector<double> flatten_values(const std::vector<Tensor>& params);
void assign_values(std::vector<Tensor>& params, std::span<const double> flat);
/// Concatenated gradients; parameters that received no gradient contribute zeros.
std::vector<double> flatten_grads(const std::vector<Tensor>& params);
void zero_grads(std::vector<Tensor>& params);

}  // namespace forge::tensor
