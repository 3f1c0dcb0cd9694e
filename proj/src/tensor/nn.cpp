#include "forge/tensor/nn.hpp"

#include <cmath>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"

namespace forge::tensor {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::exp: return "exp";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  if (name == "exp") return Activation::exp;
  throw ConfigError("unknown activation '" + name + "'");
}

Tensor apply_activation(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::softmax: return softmax(x);
    case Activation::exp: return exp(clamp(x, kExpClampLo, kExpClampHi));
  }
  return x;
}

DenseLayer DenseLayer::make(std::size_t in, std::size_t out, Activation activation, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (double& v : w) v = rng.uniform(-limit, limit);
  return DenseLayer{Tensor::matrix(out, in, std::move(w), true),
                    Tensor::zeros(Shape{out}, true), activation};
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& input) {
  if (input.cols() != layer.in_width()) {
    throw DimensionError("dense_forward: input " + shape_string(input.shape()) +
                         " does not match weights " + shape_string(layer.weights.shape()));
  }
  Tensor x = input.rank() == 1 ? reshape(input, Shape{1, input.size()}) : input;
  return apply_activation(add_row_vector(matmul_nt(x, layer.weights), layer.bias), layer.activation);
}

Mlp::Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
         Activation output_activation, Rng& rng) {
  std::size_t width = in;
  for (std::size_t h : hidden) {
    layers_.push_back(DenseLayer::make(width, h, Activation::relu, rng));
    width = h;
  }
  layers_.push_back(DenseLayer::make(width, out, output_activation, rng));
}

Tensor Mlp::forward(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) x = dense_forward(layer, x);
  return x;
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  for (const auto& layer : layers_) {
    out.push_back(layer.weights);
    out.push_back(layer.bias);
  }
  return out;
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> w{in_width()};
  for (const auto& layer : layers_) w.push_back(layer.out_width());
  return w;
}

std::size_t parameter_count(const std::vector<Tensor>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

std::vector<double> flatten_values(const std::vector<Tensor>& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  for (const auto& p : params) flat.insert(flat.end(), p.data().begin(), p.data().end());
  return flat;
}

void assign_values(std::vector<Tensor>& params, std::span<const double> flat) {
  if (flat.size() != parameter_count(params)) {
    throw DimensionError("assign_values: " + std::to_string(flat.size()) + " values for " +
                         std::to_string(parameter_count(params)) + " parameters");
  }
  std::size_t offset = 0;
  for (auto& p : params) {
    auto dst = p.mutable_data();
    std::copy_n(flat.begin() + offset, dst.size(), dst.begin());
    offset += dst.size();
  }
}

std::vector<double> flatten_grads(const std::vector<Tensor>& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  for (const auto& p : params) {
    if (p.has_grad()) {
      flat.insert(flat.end(), p.grad().begin(), p.grad().end());
    } else {
      flat.insert(flat.end(), p.size(), 0.0);
    }
  }
  return flat;
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace forge::tensor
