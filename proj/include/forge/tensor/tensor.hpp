#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace forge::tensor {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional reverse-mode tape.
///
/// Copies are shallow handles onto the same storage, so a parameter tensor held by a
/// layer and the same tensor captured in a graph share their gradient buffer.
/// The tape is rebuilt on every forward pass.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Column vector view of a flat array: shape [n].
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  /// Builds a [rows x cols] matrix.
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Leading dimension for rank-2 tensors; 1 for rank-1.
  std::size_t rows() const;
  /// Trailing dimension for rank-2 tensors; n for rank-1.
  std::size_t cols() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Reverse pass from a scalar: fills grad on every reachable tensor that requires it,
  /// then releases the recorded graph.
  void backward();

  /// Same storage, no graph history.
  Tensor detach() const;
  Tensor clone() const;

  bool defined() const { return static_cast<bool>(node_); }

  // Internal: used by ops to build the graph.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace forge::tensor
