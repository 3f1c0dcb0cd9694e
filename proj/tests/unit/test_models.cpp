#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "forge/common/errors.hpp"
#include "forge/common/rng.hpp"
#include "forge/models/bundle.hpp"
#include "forge/models/forest.hpp"
#include "forge/models/losses.hpp"
#include "forge/models/mixture.hpp"
#include "forge/tensor/ops.hpp"
#include "support/gradcheck.hpp"

using namespace forge;
using namespace forge::models;
using forge::tensor::Tensor;
namespace t = forge::tensor;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.normal() * scale;
  return Tensor::matrix(r, c, std::move(v));
}

// Zero every weight and set the output bias, so the net returns `bias` for any input.
void make_constant(t::Mlp& net, const std::vector<double>& bias) {
  for (auto& layer : net.layers()) {
    for (double& w : layer.weights.mutable_data()) w = 0.0;
    for (double& b : layer.bias.mutable_data()) b = 0.0;
  }
  auto out = net.layers().back().bias.mutable_data();
  REQUIRE(out.size() == bias.size());
  std::copy(bias.begin(), bias.end(), out.begin());
}

t::Mlp& subnet(std::vector<std::pair<std::string, t::Mlp*>> nets, const std::string& name) {
  for (auto& [n, p] : nets) {
    if (n == name) return *p;
  }
  FAIL("no subnet " << name);
  throw std::logic_error("unreachable");
}

MaskedBatch make_batch(std::size_t rows, std::size_t d, std::size_t ind, Rng& rng) {
  MaskedBatch b;
  b.y = random_matrix(rows, d, rng);
  std::vector<double> hidden(rows * d), indicators(rows * ind);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) hidden[r * d + c] = (c + r) % 2 == 0 ? 1.0 : 0.0;
    for (std::size_t c = 0; c < ind; ++c) indicators[r * ind + c] = hidden[r * d + c % d];
  }
  b.hidden = Tensor::matrix(rows, d, hidden);
  b.indicators = Tensor::matrix(rows, ind, indicators);
  return b;
}

MixtureDensity random_mixture(std::size_t k, std::size_t m, Rng& rng) {
  MixtureDensity mix;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mix.weights.push_back(rng.uniform(0.05, 1.0));
    total += mix.weights.back();
    std::vector<double> mu(m);
    for (double& v : mu) v = rng.normal();
    mix.means.push_back(mu);
    mix.variances.push_back(rng.uniform(0.2, 2.0));
  }
  for (double& w : mix.weights) w /= total;
  return mix;
}

}  // namespace

TEST_CASE("mdn_log_density closed forms") {
  MixtureDensity standard{{1.0}, {{0.0}}, {1.0}};
  const double x0[] = {0.0};
  CHECK(mdn_log_density(standard, x0) == doctest::Approx(-0.918938533204673).epsilon(1e-12));

  MixtureDensity pair{{0.5, 0.5}, {{-1.0}, {1.0}}, {1.0, 1.0}};
  CHECK(mdn_log_density(pair, x0) == doctest::Approx(std::log(std::exp(-0.5) / std::sqrt(2 * std::numbers::pi))));
  CHECK(std::abs(mdn_log_density(pair, x0) - (-1.418938533204673)) < 1e-9);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto mix = random_mixture(3, 4, rng);
    std::vector<double> x(4);
    for (double& v : x) v = rng.normal();
    double naive = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      double sq = 0.0;
      for (std::size_t d = 0; d < 4; ++d) sq += (x[d] - mix.means[k][d]) * (x[d] - mix.means[k][d]);
      naive += mix.weights[k] * std::pow(2 * std::numbers::pi * mix.variances[k], -2.0) *
               std::exp(-0.5 * sq / mix.variances[k]);
    }
    CHECK(std::abs(mdn_log_density(mix, x) - std::log(naive)) < 1e-10);
  }

  MixtureDensity bad{{0.6, 0.6}, {{0.0}, {1.0}}, {1.0, 1.0}};
  CHECK_THROWS_AS(mdn_log_density(bad, x0), ContractError);
}

TEST_CASE("mdn_log_density is invariant to component order") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto mix = random_mixture(5, 3, rng);
    std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    auto permuted = mix;
    std::vector<std::size_t> order{0, 1, 2, 3, 4};
    rng.shuffle(order);
    for (std::size_t i = 0; i < 5; ++i) {
      permuted.weights[i] = mix.weights[order[i]];
      permuted.means[i] = mix.means[order[i]];
      permuted.variances[i] = mix.variances[order[i]];
    }
    CHECK(std::abs(mdn_log_density(mix, x) - mdn_log_density(permuted, x)) < 1e-12);
  }
}

TEST_CASE("kl_diag_gaussian") {
  const double zero[] = {0.0}, one[] = {1.0}, two[] = {2.0};
  CHECK(kl_diag_gaussian(zero, one) == 0.0);
  CHECK(std::abs(kl_diag_gaussian(one, one) - 0.5) < 1e-12);
  CHECK(std::abs(kl_diag_gaussian(zero, two) - 0.5 * (1.0 - std::numbers::ln2)) < 1e-12);
  CHECK(std::abs(kl_diag_gaussian(zero, two) - 0.153426) < 1e-6);
  const double negative[] = {-0.1};
  CHECK_THROWS_AS(kl_diag_gaussian(zero, negative), DomainError);

  SUBCASE("non-negative, zero only at the prior") {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> mu(3), s2(3);
      for (double& v : mu) v = rng.normal();
      for (double& v : s2) v = std::exp(rng.normal());
      CHECK(kl_diag_gaussian(mu, s2) > 0.0);
    }
  }

  SUBCASE("Monte Carlo estimate") {
    // KL = E_q[log q(z) − log p(z)] with q = N(μ, σ²).
    const double mu = 0.7, s2 = 0.5;
    Rng rng(6);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = mu + std::sqrt(s2) * rng.normal();
      const double log_q = -0.5 * std::log(2 * std::numbers::pi * s2) - 0.5 * (z - mu) * (z - mu) / s2;
      const double log_p = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z;
      acc += log_q - log_p;
    }
    const double mc = acc / n;
    const double mu_arr[] = {mu}, s2_arr[] = {s2};
    const double exact = kl_diag_gaussian(mu_arr, s2_arr);
    CHECK(std::abs(mc - exact) / exact < 0.01);
  }

  SUBCASE("tape version agrees") {
    auto mu = Tensor::matrix(1, 2, {0.3, -1.2});
    auto lv = Tensor::matrix(1, 2, {std::log(0.4), std::log(1.7)});
    const double mu_arr[] = {0.3, -1.2}, s2_arr[] = {0.4, 1.7};
    CHECK(std::abs(kl_diag_gaussian(mu, lv).item() - kl_diag_gaussian(mu_arr, s2_arr)) < 1e-12);
  }
}

TEST_CASE("reparameterize") {
  const double mu[] = {0.5, -1.0}, sigma[] = {2.0, 3.0}, zero[] = {0.0, 0.0}, one[] = {1.0, 0.0};
  auto z0 = reparameterize(mu, sigma, zero);
  CHECK(z0[0] == 0.5);
  CHECK(z0[1] == -1.0);
  CHECK(reparameterize(mu, sigma, one)[0] == 2.5);
  const double short_eps[] = {1.0};
  CHECK_THROWS_AS(reparameterize(mu, sigma, short_eps), DimensionError);

  SUBCASE("empirical moments") {
    Rng rng(7);
    const int n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double eps[] = {rng.normal()};
      const double m1[] = {1.5}, s1[] = {0.8};
      const double z = reparameterize(m1, s1, eps)[0];
      sum += z;
      sum_sq += z * z;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean - 1.5) / 1.5 < 0.01);
    CHECK(std::abs(sd - 0.8) / 0.8 < 0.01);
  }

  SUBCASE("gradient reaches mu and sigma only") {
    auto m = Tensor::matrix(1, 2, {0.1, 0.2}, true);
    auto s = Tensor::matrix(1, 2, {1.0, 2.0}, true);
    auto e = Tensor::matrix(1, 2, {0.5, -0.5}, true);
    t::sum(reparameterize(m, s, e)).backward();
    CHECK(m.grad()[0] == 1.0);
    CHECK(s.grad()[1] == -0.5);
    CHECK_FALSE(e.has_grad());
  }
}

TEST_CASE("mdn_nll") {
  Rng rng(8);
  SUBCASE("single unit Gaussian centred on the target") {
    PredictorHead head(PredictorHead::Kind::mdn, 2, 1, {4}, 1, rng);
    auto nets = head.subnets();
    make_constant(subnet(nets, "predictor.mdn"), {0.0, 0.75, 0.0});  // [logit | mean | logvar]
    auto nll = mdn_nll(head, Tensor::matrix(1, 2, {3.0, -1.0}), Tensor::matrix(1, 1, {0.75}));
    CHECK(std::abs(nll.item() - kHalfLog2Pi) < 1e-12);
  }
  SUBCASE("one-hot weights reduce to a single Gaussian") {
    PredictorHead head(PredictorHead::Kind::mdn, 2, 1, {4}, 2, rng);
    auto nets = head.subnets();
    make_constant(subnet(nets, "predictor.mdn"), {200.0, 0.0, 0.0, 5.0, std::log(2.0), 0.0});
    const double x = 0.4;
    auto nll = mdn_nll(head, Tensor::matrix(1, 2, {1.0, 1.0}), Tensor::matrix(1, 1, {x}));
    const double single = 0.5 * std::log(2 * std::numbers::pi * 2.0) + 0.5 * x * x / 2.0;
    CHECK(std::abs(nll.item() - single) < 1e-12);
  }
  SUBCASE("gradient with respect to the condition and parameters") {
    PredictorHead head(PredictorHead::Kind::mdn, 3, 2, {8}, 3, rng);
    auto cond = random_matrix(4, 3, rng);
    cond.set_requires_grad(true);
    auto x = random_matrix(4, 2, rng);
    auto params = head.parameters();
    params.push_back(cond);
    auto res = testing::gradient_check(params, [&] { return mdn_nll(head, cond, x); });
    CHECK(res.max_relative_deviation < 1e-4);
  }
  SUBCASE("mlp kind scores a unit-variance Gaussian") {
    PredictorHead head(PredictorHead::Kind::mlp, 2, 2, {4}, 5, rng);
    make_constant(subnet(head.subnets(), "predictor.mlp"), {1.0, 2.0});
    auto nll = mdn_nll(head, Tensor::matrix(1, 2, {0.0, 0.0}), Tensor::matrix(1, 2, {1.0, 3.0}));
    CHECK(std::abs(nll.item() - (2 * kHalfLog2Pi + 0.5)) < 1e-12);
    auto mixes = head.mixtures(Tensor::matrix(1, 2, {0.0, 0.0}));
    REQUIRE(mixes.size() == 1);
    CHECK(mixes[0].is_point_mass());
    CHECK(mixes[0].weights == std::vector<double>{1.0});
  }
}

TEST_CASE("MDN head outputs are valid mixtures for any finite input") {
  Rng rng(9);
  PredictorHead head(PredictorHead::Kind::mdn, 4, 3, {16, 8}, 5, rng);
  for (int trial = 0; trial < 30; ++trial) {
    const double scale = std::pow(10.0, rng.uniform(-3, 3));
    auto cond = random_matrix(3, 4, rng, scale);
    for (const auto& mix : head.mixtures(cond)) {
      CHECK_NOTHROW(mix.validate());
      for (double v : mix.variances) CHECK(v > 0.0);
    }
  }
}

TEST_CASE("cvae_elbo") {
  Rng rng(10);
  const std::size_t d = 3, ind = 3, latent = 2;
  SUBCASE("prior recognition leaves only the decoder term") {
    CvaeImputer cvae(d, ind, latent, {6}, rng);
    make_constant(subnet(cvae.subnets(), "cvae.recognition_mean"), {0.0, 0.0});
    make_constant(subnet(cvae.subnets(), "cvae.recognition_logvar"), {0.0, 0.0});
    auto batch = make_batch(4, d, ind, rng);
    auto eps = random_matrix(4, latent, rng);
    auto elbo = cvae_elbo(cvae, batch, eps).item();
    auto [mu, lv] = cvae.encode(batch);
    auto z = reparameterize(mu, t::exp(t::scale(lv, 0.5)), eps);
    auto [mean, dec_lv] = cvae.decode(batch, z);
    auto ll = t::mean(diag_gaussian_log_likelihood(batch.y, mean, dec_lv, batch.hidden)).item();
    CHECK(elbo == ll);
  }
  SUBCASE("decoder centred on h with unit variance") {
    CvaeImputer cvae(d, ind, latent, {6}, rng);
    MaskedBatch batch;
    batch.y = Tensor::matrix(1, d, {0.2, -0.4, 1.1});
    batch.hidden = Tensor::matrix(1, d, {1, 1, 1});
    batch.indicators = Tensor::matrix(1, ind, {1, 1, 1});
    make_constant(subnet(cvae.subnets(), "cvae.generation"), {0.2, -0.4, 1.1, 0.0, 0.0, 0.0});
    auto [mu, lv] = cvae.encode(batch);
    auto z = random_matrix(1, latent, rng);
    auto [mean, dec_lv] = cvae.decode(batch, z);
    auto ll = diag_gaussian_log_likelihood(batch.y, mean, dec_lv, batch.hidden).item();
    CHECK(std::abs(ll + 3.0 * kHalfLog2Pi) < 1e-12);
  }
  SUBCASE("gradient over recognition and generation parameters") {
    CvaeImputer cvae(d, ind, latent, {8}, rng);
    auto batch = make_batch(3, d, ind, rng);
    auto eps = random_matrix(3, latent, rng);
    auto params = cvae.recognition_parameters();
    for (auto& p : cvae.generation_parameters()) params.push_back(p);
    auto res = testing::gradient_check(params, [&] { return cvae_elbo(cvae, batch, eps); });
    CHECK(res.max_relative_deviation < 1e-4);
  }
}

TEST_CASE("cvae_elbo lower-bounds a Monte Carlo log-likelihood on a 1-D toy") {
  Rng rng(12);
  CvaeImputer cvae(1, 1, 1, {4}, rng);
  MaskedBatch one;
  one.y = Tensor::matrix(1, 1, {0.3});
  one.hidden = Tensor::matrix(1, 1, {1.0});
  one.indicators = Tensor::matrix(1, 1, {1.0});

  // log P(h|v) = log E_{z~N(0,1)} P_θ(h | z, v), estimated with 10⁵ prior draws.
  const std::size_t n = 100000;
  MaskedBatch many;
  many.y = Tensor::full({n, 1}, 0.3);
  many.hidden = Tensor::full({n, 1}, 1.0);
  many.indicators = Tensor::full({n, 1}, 1.0);
  t::NoGradGuard guard;
  auto z = random_matrix(n, 1, rng);
  auto [mean, lv] = cvae.decode(many, z);
  auto ll = diag_gaussian_log_likelihood(many.y, mean, lv, many.hidden);
  const double mx = *std::max_element(ll.data().begin(), ll.data().end());
  double acc = 0.0;
  for (double v : ll.data()) acc += std::exp(v - mx);
  const double log_marginal = mx + std::log(acc / static_cast<double>(n));

  auto eps = random_matrix(n, 1, rng);
  const double elbo = cvae_elbo(cvae, many, eps).item();
  CHECK(elbo <= log_marginal + 0.01);
}

TEST_CASE("hybrid_cvae_objective") {
  Rng rng(13);
  const std::size_t d = 3, ind = 3, latent = 2;
  CvaeImputer cvae(d, ind, latent, {8}, rng);
  auto batch = make_batch(3, d, ind, rng);
  auto eps = random_matrix(3, latent, rng);

  SUBCASE("vanishing lambda recovers the ELBO") {
    PredictorHead head(PredictorHead::Kind::mdn, d, 2, {8}, 2, rng);
    auto x = random_matrix(3, 2, rng);
    const double elbo = cvae_elbo(cvae, batch, eps).item();
    const double hybrid = hybrid_cvae_objective(cvae, head, batch, x, 1e-12, eps).item();
    CHECK(std::abs(hybrid - elbo) < 1e-9);
  }
  SUBCASE("perfect unit Gaussian predictor adds -ln(2 pi)/2") {
    PredictorHead head(PredictorHead::Kind::mdn, d, 1, {4}, 1, rng);
    make_constant(subnet(head.subnets(), "predictor.mdn"), {0.0, 0.25, 0.0});
    auto x = Tensor::full({3, 1}, 0.25);
    const double elbo = cvae_elbo(cvae, batch, eps).item();
    CHECK(std::abs(hybrid_cvae_objective(cvae, head, batch, x, 1.0, eps).item() - (elbo - kHalfLog2Pi)) < 1e-12);
  }
  SUBCASE("end-to-end gradient on a 3-D toy") {
    PredictorHead head(PredictorHead::Kind::mdn, d, 2, {8}, 2, rng);
    auto x = random_matrix(3, 2, rng);
    auto params = cvae.recognition_parameters();
    for (auto& p : cvae.generation_parameters()) params.push_back(p);
    for (auto& p : head.parameters()) params.push_back(p);
    auto res = testing::gradient_check(params, [&] { return hybrid_cvae_objective(cvae, head, batch, x, 0.7, eps); });
    CHECK(res.max_relative_deviation < 1e-4);
  }
  SUBCASE("without the predictive term it is the ELBO bit for bit") {
    PredictorHead head(PredictorHead::Kind::mlp, d, 2, {8}, 1, rng);
    auto x = random_matrix(3, 2, rng);
    HybridTerms terms;
    terms.predictive = false;
    CHECK(hybrid_cvae_objective(cvae, head, batch, x, 1.0, eps, terms).item() == cvae_elbo(cvae, batch, eps).item());
  }
  SUBCASE("lambda must be positive") {
    PredictorHead head(PredictorHead::Kind::mlp, d, 2, {8}, 1, rng);
    auto x = random_matrix(3, 2, rng);
    CHECK_THROWS_AS(hybrid_cvae_objective(cvae, head, batch, x, 0.0, eps), ConfigError);
    CHECK_THROWS_AS(hybrid_cvae_objective(cvae, head, batch, x, -1.0, eps), ConfigError);
  }
}

TEST_CASE("cgan_losses") {
  Rng rng(14);
  SUBCASE("indifferent discriminator") {
    CganImputer cgan(2, 2, 2, {4}, rng);
    make_constant(subnet(cgan.subnets(), "cgan.discriminator"), {0.0});
    auto batch = make_batch(3, 2, 2, rng);
    auto losses = cgan_losses(cgan, batch, random_matrix(3, 2, rng));
    CHECK(std::abs(losses.disc_loss.item() - 2.0 * std::numbers::ln2) < 1e-12);
    CHECK(std::abs(losses.gen_loss.item() - std::numbers::ln2) < 1e-12);
  }
  SUBCASE("perfect discriminator") {
    CganImputer cgan(1, 1, 1, {}, rng);
    make_constant(subnet(cgan.subnets(), "cgan.generator"), {-1.0});
    auto& disc = subnet(cgan.subnets(), "cgan.discriminator");
    make_constant(disc, {0.0});
    disc.layers().back().weights.mutable_data()[0] = 100.0;
    MaskedBatch batch;
    batch.y = Tensor::matrix(2, 1, {1.0, 1.0});
    batch.hidden = Tensor::matrix(2, 1, {1.0, 1.0});
    batch.indicators = Tensor::matrix(2, 1, {0.0, 0.0});
    auto losses = cgan_losses(cgan, batch, random_matrix(2, 1, rng));
    CHECK(losses.disc_loss.item() >= 0.0);
    CHECK(losses.disc_loss.item() < 1e-6);
    // The clamp keeps the generator loss finite.
    CHECK(std::abs(losses.gen_loss.item() + std::log(kDiscriminatorClamp)) < 1e-9);
  }
  SUBCASE("gradients") {
    CganImputer cgan(3, 3, 2, {8}, rng);
    auto batch = make_batch(4, 3, 3, rng);
    auto z = random_matrix(4, 2, rng);
    auto disc = testing::gradient_check(cgan.discriminator_parameters(),
                                        [&] { return cgan_losses(cgan, batch, z).disc_loss; });
    CHECK(disc.max_relative_deviation < 1e-4);
    auto gen = testing::gradient_check(cgan.generator_parameters(),
                                       [&] { return cgan_losses(cgan, batch, z).gen_loss; });
    CHECK(gen.max_relative_deviation < 1e-4);
  }
}

TEST_CASE("hybrid_cgan_loss") {
  Rng rng(15);
  const std::size_t d = 3;
  CganImputer cgan(d, d, 2, {8}, rng);
  PredictorHead head(PredictorHead::Kind::mdn, d, 2, {8}, 2, rng);
  auto batch = make_batch(4, d, d, rng);
  auto z = random_matrix(4, 2, rng);
  auto x = random_matrix(4, 2, rng);

  SUBCASE("design term reaches the generator") {
    HybridTerms only_design;
    only_design.generative = false;
    auto gen_params = cgan.generator_parameters();
    t::zero_grads(gen_params);
    hybrid_cgan_loss(cgan, head, batch, x, z, 1.0, only_design).joint_objective.backward();
    double norm = 0.0;
    for (double g : t::flatten_grads(gen_params)) norm += g * g;
    CHECK(norm > 0.0);
    auto params = gen_params;
    for (auto& p : head.parameters()) params.push_back(p);
    auto res = testing::gradient_check(
        params, [&] { return hybrid_cgan_loss(cgan, head, batch, x, z, 1.0, only_design).joint_objective; });
    CHECK(res.max_relative_deviation < 1e-4);
  }
  SUBCASE("joint objective gradient") {
    auto params = cgan.generator_parameters();
    for (auto& p : head.parameters()) params.push_back(p);
    auto res = testing::gradient_check(
        params, [&] { return hybrid_cgan_loss(cgan, head, batch, x, z, 0.5, {}).joint_objective; });
    CHECK(res.max_relative_deviation < 1e-4);
  }
  SUBCASE("without the design term it matches plain CGAN bit for bit") {
    HybridTerms adversarial_only;
    adversarial_only.predictive = false;
    auto hybrid = hybrid_cgan_loss(cgan, head, batch, x, z, 1.0, adversarial_only);
    auto plain = cgan_losses(cgan, batch, z);
    CHECK(hybrid.disc_loss.item() == plain.disc_loss.item());
    CHECK(hybrid.joint_objective.item() == -plain.gen_loss.item());
  }
  SUBCASE("frozen generator and design term only reproduce mdn_nll") {
    HybridTerms only_design;
    only_design.generative = false;
    const double joint = hybrid_cgan_loss(cgan, head, batch, x, z, 1.0, only_design).joint_objective.item();
    auto fake = batch.merge(cgan.generate(batch, z));
    CHECK(std::abs(joint + mdn_nll(head, fake, x).item()) < 1e-12);
  }
  SUBCASE("lambda must be positive") {
    CHECK_THROWS_AS(hybrid_cgan_loss(cgan, head, batch, x, z, 0.0), ConfigError);
  }
}

TEST_CASE("random forest") {
  SUBCASE("constant target") {
    Rng rng(16);
    auto features = RowMatrix(40, 6);
    for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = rng.normal();
    RowMatrix targets = RowMatrix::Constant(40, 2, 3.25);
    ForestModel forest;
    forest.fit(features, targets, {}, 1);
    for (int i = 0; i < 10; ++i) {
      std::vector<double> q(6);
      for (double& v : q) v = rng.normal() * 5;
      auto p = forest.predict(q);
      CHECK(p[0] == 3.25);
      CHECK(p[1] == 3.25);
    }
  }
  SUBCASE("single tree on a perfectly separable feature") {
    RowMatrix features(12, 1), targets(12, 1);
    for (int i = 0; i < 12; ++i) {
      features(i, 0) = i;
      targets(i, 0) = i < 6 ? 1.0 : 4.0;
    }
    ForestOptions opts;
    opts.trees = 1;
    opts.bootstrap = false;
    ForestModel forest;
    forest.fit(features, targets, opts, 2);
    REQUIRE(forest.trees().size() == 1);
    CHECK(forest.trees()[0].nodes().size() == 3);
    CHECK(forest.trees()[0].nodes()[0].threshold == 5.5);
    const double lo[] = {2.0}, hi[] = {9.0};
    CHECK(forest.predict(lo)[0] == 1.0);
    CHECK(forest.predict(hi)[0] == 4.0);
  }
  SUBCASE("width mismatch") {
    RowMatrix features = RowMatrix::Zero(10, 3), targets = RowMatrix::Zero(10, 1);
    ForestModel forest;
    forest.fit(features, targets, {}, 3);
    const double q[] = {1.0, 2.0};
    CHECK_THROWS_AS(forest.predict(q), DimensionError);
  }
  SUBCASE("flat round trip") {
    Rng rng(17);
    RowMatrix features(60, 4), targets(60, 2);
    for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = rng.normal();
    ForestOptions opts;
    opts.trees = 3;
    ForestModel forest;
    forest.fit(features, targets, opts, 4);
    std::vector<RegressionTree> copies;
    for (const auto& tree : forest.trees()) copies.push_back(RegressionTree::from_flat(tree.to_flat()));
    ForestModel restored;
    restored.restore(4, 2, copies);
    const double q[] = {0.1, -0.2, 0.3, 0.4};
    CHECK(restored.predict(q) == forest.predict(q));
    auto flat = forest.trees()[0].to_flat();
    flat.pop_back();
    CHECK_THROWS_AS(RegressionTree::from_flat(flat), IntegrityError);
  }
}

TEST_CASE("model bundle wiring") {
  ArchConfig arch;
  arch.target_width = 6;
  arch.indicator_width = 2;
  arch.design_width = 3;
  arch.hidden = {8};
  arch.latent_dim = 2;
  arch.components = 2;
  CHECK(model_kind_from_string("cvae_mdn") == ModelKind::cvae_mdn);
  CHECK_THROWS_AS(model_kind_from_string("vae"), ConfigError);
  auto plain = ModelBundle::create(ModelKind::mdn, arch, 1);
  CHECK(plain.predictor_input_width() == 8);
  CHECK(plain.subnets().size() == 1);
  auto hybrid = ModelBundle::create(ModelKind::cgan_mlp, arch, 1);
  CHECK(hybrid.predictor_input_width() == 6);
  CHECK(hybrid.subnets().size() == 3);
  CHECK(hybrid.subnets()[0].first == "cgan.generator");

  RowMatrix rows(3, 2);
  rows << 1, 5, 2, 5, 3, 5;
  auto s = Standardizer::fit(rows);
  CHECK(s.scale[1] == 1.0);
  CHECK(s.mean[1] == 0.0);
  auto z = s.transform(rows);
  CHECK(std::abs(z(0, 0) + z(2, 0)) < 1e-15);
  CHECK(z(1, 1) == 5.0);
}
