#include "forge/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/common/errors.hpp"

namespace forge::tensor {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

using detail::Node;

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& t : inputs) node->parents.push_back(t.node());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

// Unary elementwise op with derivative expressed from input x and output y.
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
  });
}

}  // namespace

Tensor matmul_nt(const Tensor& x, const Tensor& w) {
  const std::size_t b = x.rows(), in = x.cols();
  if (w.rank() != 2 || w.cols() != in) {
    throw DimensionError("matmul: input " + shape_string(x.shape()) + " incompatible with weights " +
                         shape_string(w.shape()));
  }
  const std::size_t out_dim = w.rows();
  std::vector<double> out(b * out_dim);
  Map(out.data(), b, out_dim).noalias() =
      MapC(x.data().data(), b, in) * MapC(w.data().data(), out_dim, in).transpose();
  return make_result(matrix_shape(b, out_dim), std::move(out), {x, w}, [b, in, out_dim](Node& self) {
    Node& xn = *self.parents[0];
    Node& wn = *self.parents[1];
    MapC dy(self.grad.data(), b, out_dim);
    if (xn.requires_grad) {
      Map(xn.grad_buffer().data(), b, in).noalias() += dy * MapC(wn.data.data(), out_dim, in);
    }
    if (wn.requires_grad) {
      Map(wn.grad_buffer().data(), out_dim, in).noalias() += dy.transpose() * MapC(xn.data.data(), b, in);
    }
  });
}

Tensor add_row_vector(const Tensor& x, const Tensor& bias) {
  const std::size_t b = x.rows(), n = x.cols();
  if (bias.size() != n) {
    throw DimensionError("add_row_vector: bias " + shape_string(bias.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bv = bias.data();
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  return make_result(x.shape(), std::move(out), {x, bias}, [b, n](Node& self) {
    Node& xn = *self.parents[0];
    Node& bn = *self.parents[1];
    if (xn.requires_grad) {
      auto& g = xn.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer();
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += self.grad[r * n + c];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = an.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.data[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.data[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = an.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / bn.data[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i] * self.data[i] / bn.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      a, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& logits) {
  const std::size_t b = logits.rows(), n = logits.cols();
  if (n == 0) throw DimensionError("softmax of empty row");
  std::vector<double> out(logits.size());
  const auto in = logits.data();
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = in.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::isfinite(row[c])) throw NumericError("softmax: non-finite logit");
      mx = std::max(mx, row[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += (out[r * n + c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= total;
  }
  return make_result(logits.shape(), std::move(out), {logits}, [b, n](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad[r * n + c] * self.data[r * n + c];
      for (std::size_t c = 0; c < n; ++c)
        g[r * n + c] += self.data[r * n + c] * (self.grad[r * n + c] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& logits) {
  const std::size_t b = logits.rows(), n = logits.cols();
  if (n == 0) throw DimensionError("log_softmax of empty row");
  std::vector<double> out(logits.size());
  const auto in = logits.data();
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = in.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::isfinite(row[c])) throw NumericError("log_softmax: non-finite logit");
      mx = std::max(mx, row[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += std::exp(row[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = row[c] - lse;
  }
  return make_result(logits.shape(), std::move(out), {logits}, [b, n](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < n; ++c) total += self.grad[r * n + c];
      for (std::size_t c = 0; c < n; ++c)
        g[r * n + c] += self.grad[r * n + c] - std::exp(self.data[r * n + c]) * total;
    }
  });
}

Tensor logsumexp_rows(const Tensor& x) {
  const std::size_t b = x.rows(), n = x.cols();
  if (n == 0) throw DimensionError("logsumexp of empty row");
  std::vector<double> out(b);
  const auto in = x.data();
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = in.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    if (!std::isfinite(mx)) {
      out[r] = mx;
      continue;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += std::exp(row[c] - mx);
    out[r] = mx + std::log(total);
  }
  return make_result(matrix_shape(b, 1), std::move(out), {x}, [b, n](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t c = 0; c < n; ++c)
        g[r * n + c] += self.grad[r] * std::exp(p.data[r * n + c] - self.data[r]);
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result(Shape{1}, {total}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_cols(const Tensor& x) { return group_sum_cols(x, x.cols()); }

Tensor group_sum_cols(const Tensor& x, std::size_t group) {
  const std::size_t b = x.rows(), n = x.cols();
  if (group == 0 || n % group != 0) {
    throw DimensionError("group_sum_cols: width " + std::to_string(n) + " not divisible by " +
                         std::to_string(group));
  }
  const std::size_t k = n / group;
  std::vector<double> out(b * k, 0.0);
  const auto in = x.data();
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * k + c / group] += in[r * n + c];
  return make_result(matrix_shape(b, k), std::move(out), {x}, [b, n, k, group](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.grad[r * k + c / group];
  });
}

Tensor tile_cols(const Tensor& x, std::size_t times) {
  const std::size_t b = x.rows(), n = x.cols();
  std::vector<double> out(b * n * times);
  const auto in = x.data();
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t t = 0; t < times; ++t)
      for (std::size_t c = 0; c < n; ++c) out[(r * times + t) * n + c] = in[r * n + c];
  return make_result(matrix_shape(b, n * times), std::move(out), {x}, [b, n, times](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t t = 0; t < times; ++t)
        for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.grad[(r * times + t) * n + c];
  });
}

Tensor repeat_cols(const Tensor& x, std::size_t times) {
  const std::size_t b = x.rows(), n = x.cols();
  std::vector<double> out(b * n * times);
  const auto in = x.data();
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t t = 0; t < times; ++t) out[(r * n + c) * times + t] = in[r * n + c];
  return make_result(matrix_shape(b, n * times), std::move(out), {x}, [b, n, times](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t t = 0; t < times; ++t) g[r * n + c] += self.grad[(r * n + c) * times + t];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t b = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rows() != b) {
      throw DimensionError("concat_cols: row count " + std::to_string(p.rows()) + " vs " +
                           std::to_string(b));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(b * total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto in = parts[i].data();
    for (std::size_t r = 0; r < b; ++r)
      std::copy_n(in.data() + r * widths[i], widths[i], out.data() + r * total + offset);
    offset += widths[i];
  }
  return make_result(matrix_shape(b, total), std::move(out), parts, [b, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      Node& p = *self.parents[i];
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t c = 0; c < widths[i]; ++c) g[r * widths[i] + c] += self.grad[r * total + off + c];
      }
      off += widths[i];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  const std::size_t b = x.rows(), n = x.cols();
  if (start + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of width " + std::to_string(n));
  }
  std::vector<double> out(b * count);
  const auto in = x.data();
  for (std::size_t r = 0; r < b; ++r) std::copy_n(in.data() + r * n + start, count, out.data() + r * count);
  return make_result(matrix_shape(b, count), std::move(out), {x}, [b, n, start, count](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t c = 0; c < count; ++c) g[r * n + start + c] += self.grad[r * count + c];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  const std::size_t b = x.rows(), n = x.cols();
  if (start + count > b) throw DimensionError("slice_rows: range out of bounds");
  const auto in = x.data();
  std::vector<double> out(in.begin() + start * n, in.begin() + (start + count) * n);
  return make_result(matrix_shape(count, n), std::move(out), {x}, [n, start](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * n + i] += self.grad[i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw DimensionError("reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

}  // namespace forge::tensor
