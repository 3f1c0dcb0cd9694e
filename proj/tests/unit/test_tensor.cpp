#include <cmath>
#include <numbers>

#include "doctest.h"
#include "forge/common/errors.hpp"
#include "forge/common/rng.hpp"
#include "forge/tensor/adam.hpp"
#include "forge/tensor/nn.hpp"
#include "forge/tensor/ops.hpp"
#include "support/gradcheck.hpp"

using namespace forge;
using namespace forge::tensor;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, bool grad = true, double scale = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.normal() * scale;
  return Tensor::matrix(r, c, std::move(v), grad);
}

}  // namespace

TEST_CASE("dense_forward small cases") {
  SUBCASE("identity weights") {
    DenseLayer layer{Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor::vector({0, 0, 0}),
                     Activation::identity};
    auto out = dense_forward(layer, Tensor::matrix(1, 3, {1, 2, 3}));
    CHECK(out.shape() == Shape{1, 3});
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 3.0);
  }
  SUBCASE("zero weights return bias") {
    DenseLayer layer{Tensor::matrix(1, 2, {0, 0}), Tensor::vector({5}), Activation::identity};
    CHECK(dense_forward(layer, Tensor::matrix(1, 2, {-3.5, 8.0})).item() == 5.0);
  }
  SUBCASE("affine") {
    DenseLayer layer{Tensor::matrix(1, 1, {2}), Tensor::vector({1}), Activation::identity};
    CHECK(dense_forward(layer, Tensor::matrix(1, 1, {3})).item() == 7.0);
  }
  SUBCASE("width mismatch names both shapes") {
    DenseLayer layer{Tensor::matrix(1, 2, {1, 1}), Tensor::vector({0}), Activation::identity};
    try {
      dense_forward(layer, Tensor::matrix(1, 3, {1, 2, 3}));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[1 x 3]") != std::string::npos);
      CHECK(msg.find("[1 x 2]") != std::string::npos);
    }
  }
}

TEST_CASE("softmax") {
  auto uniform = softmax(Tensor::vector({0, 0, 0}));
  for (double v : uniform.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const double c = 0.7;
  auto shifted = softmax(Tensor::vector({c, c + std::numbers::ln2}));
  CHECK(shifted[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(shifted[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  auto extreme = softmax(Tensor::vector({1000, 0}));
  CHECK(std::isfinite(extreme[0]));
  CHECK(extreme[0] == doctest::Approx(1.0));
  CHECK(extreme[1] < 1e-300);

  CHECK_THROWS_AS(softmax(Tensor::vector({1.0, NAN})), NumericError);
  CHECK_THROWS_AS(softmax(Tensor::vector({1.0, INFINITY})), NumericError);

  SUBCASE("property: probability vector for random finite logits") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(12);
      std::vector<double> logits(n);
      for (double& v : logits) v = rng.normal() * std::pow(10.0, rng.uniform(-2, 3));
      auto p = softmax(Tensor::vector(logits));
      double total = 0.0;
      for (double v : p.data()) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("backward analytic examples") {
  auto x = Tensor::scalar(3.0, true);
  square(x).backward();
  CHECK(x.grad()[0] == 6.0);

  auto y = Tensor::vector({-1.0, 2.0}, true);
  sum(relu(y)).backward();
  CHECK(y.grad()[0] == 0.0);
  CHECK(y.grad()[1] == 1.0);

  CHECK_THROWS_AS(relu(Tensor::vector({1.0, 2.0}, true)).backward(), ContractError);
}

TEST_CASE("random two-layer network matches finite differences") {
  Rng rng(7);
  Mlp net(4, {6}, 3, Activation::identity, rng);
  auto input = random_matrix(5, 4, rng, false);
  auto target = random_matrix(5, 3, rng, false);
  auto loss = [&] { return mean(square(sub(net.forward(input), target))); };
  auto result = testing::gradient_check(net.parameters(), loss);
  CHECK(result.checked == parameter_count(net.parameters()));
  CHECK(result.max_relative_deviation < 1e-4);
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(2024);
  auto a = random_matrix(3, 4, rng);
  auto b = random_matrix(3, 4, rng);
  auto positive = Tensor::matrix(3, 4, {0.5, 1.2, 2.0, 0.9, 1.7, 0.3, 0.8, 1.1, 2.5, 0.6, 1.4, 0.7}, true);
  auto w = random_matrix(2, 4, rng);
  auto bias = Tensor::vector({0.3, -0.2}, true);
  auto weights = random_matrix(3, 4, rng, false);

  // Each loss is a weighted sum so that every output entry carries a distinct gradient.
  auto weighted = [&](const Tensor& t) {
    Tensor wts = Tensor::full(t.shape(), 0.0);
    auto d = wts.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::sin(1.0 + static_cast<double>(i));
    return sum(mul(t, wts));
  };

  struct Case {
    const char* name;
    std::function<Tensor()> fn;
    std::vector<Tensor> params;
  };
  std::vector<Case> cases{
      {"matmul+bias", [&] { return weighted(add_row_vector(matmul_nt(a, w), bias)); }, {a, w, bias}},
      {"add", [&] { return weighted(add(a, b)); }, {a, b}},
      {"sub", [&] { return weighted(sub(a, b)); }, {a, b}},
      {"mul", [&] { return weighted(mul(a, b)); }, {a, b}},
      {"div", [&] { return weighted(div(a, positive)); }, {a, positive}},
      {"scale", [&] { return weighted(scale(a, -1.7)); }, {a}},
      {"sigmoid", [&] { return weighted(sigmoid(a)); }, {a}},
      {"exp", [&] { return weighted(exp(a)); }, {a}},
      {"log", [&] { return weighted(log(positive)); }, {positive}},
      {"square", [&] { return weighted(square(a)); }, {a}},
      {"softmax", [&] { return weighted(softmax(a)); }, {a}},
      {"log_softmax", [&] { return weighted(log_softmax(a)); }, {a}},
      {"logsumexp", [&] { return sum(mul(logsumexp_rows(a), Tensor::matrix(3, 1, {1.0, -2.0, 0.5}))); }, {a}},
      {"mean", [&] { return mean(mul(a, a)); }, {a}},
      {"group_sum", [&] { return weighted(repeat_cols(group_sum_cols(a, 2), 2)); }, {a}},
      {"tile", [&] { return sum(mul(tile_cols(a, 2), concat_cols({weights, b.detach()}))); }, {a}},
      {"concat+slice", [&] { return weighted(slice_cols(concat_cols({b, a}), 2, 4)); }, {a, b}},
      {"slice_rows", [&] { return sum(square(slice_rows(a, 1, 2))); }, {a}},
      {"exp activation", [&] { return weighted(apply_activation(a, Activation::exp)); }, {a}},
  };
  for (auto& c : cases) {
    CAPTURE(c.name);
    auto result = testing::gradient_check(c.params, c.fn);
    CHECK(result.max_relative_deviation < 1e-4);
  }
}

TEST_CASE("exp activation clamps its input") {
  auto out = apply_activation(Tensor::vector({100.0, -100.0, 1.0}), Activation::exp);
  CHECK(out[0] == std::exp(20.0));
  CHECK(out[1] == std::exp(-20.0));
  CHECK(out[2] == std::exp(1.0));
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient is a fixed point") {
    auto state = AdamState::fresh(3);
    std::vector<double> params{1.0, -2.0, 3.5};
    const auto before = params;
    std::vector<double> grads(3, 0.0);
    for (int i = 0; i < 4; ++i) adam_step(state, params, grads);
    CHECK(params == before);
    CHECK(state.step_count == 4);
  }
  SUBCASE("first step moves by lr against the gradient sign") {
    auto state = AdamState::fresh(2, 0.001);
    std::vector<double> params{0.0, 0.0};
    std::vector<double> grads{0.1, -0.1};
    adam_step(state, params, grads);
    CHECK(params[0] == doctest::Approx(-0.001 * 0.1 / (0.1 + 1e-8)).epsilon(1e-12));
    CHECK(params[1] == doctest::Approx(0.001 * 0.1 / (0.1 + 1e-8)).epsilon(1e-12));
    CHECK(params[0] == -params[1]);
    CHECK(state.step_count == 1);
  }
  SUBCASE("length mismatch") {
    auto state = AdamState::fresh(2);
    std::vector<double> params{0.0, 0.0};
    std::vector<double> grads{0.1};
    CHECK_THROWS_AS(adam_step(state, params, grads), DimensionError);
  }
}

TEST_CASE("optimizer reduces a quadratic and is deterministic") {
  auto run = [] {
    Rng rng(5);
    Mlp net(2, {8}, 1, Activation::identity, rng);
    AdamOptimizer opt(net.parameters(), 0.01);
    auto x = random_matrix(16, 2, rng, false);
    std::vector<double> t(16);
    for (std::size_t i = 0; i < 16; ++i) t[i] = x.at(i, 0) - 2.0 * x.at(i, 1);
    auto target = Tensor::matrix(16, 1, t);
    double first = 0.0, last = 0.0;
    for (int it = 0; it < 300; ++it) {
      auto loss = mean(square(sub(net.forward(x), target)));
      if (it == 0) first = loss.item();
      last = loss.item();
      loss.backward();
      opt.step();
    }
    return std::make_pair(first, flatten_values(net.parameters()).back() + last);
  };
  auto [first, fingerprint] = run();
  auto [first2, fingerprint2] = run();
  CHECK(first == first2);
  CHECK(fingerprint == fingerprint2);
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  auto t = Tensor::matrix(2, 2, {1, 2, 3, 4}, true);
  sum(t).backward();
  CHECK(t.grad().size() == t.size());
  NoGradGuard guard;
  auto u = square(t);
  CHECK_FALSE(u.requires_grad());
}
