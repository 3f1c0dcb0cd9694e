#include "forge/models/networks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"

namespace forge::models {

namespace t = forge::tensor;

namespace {

void require_finite(const Tensor& x, const std::string& net) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericError(net + " produced a non-finite output");
  }
}

std::vector<Tensor> concat_params(std::initializer_list<const t::Mlp*> nets) {
  std::vector<Tensor> out;
  for (const auto* net : nets) {
    auto p = net->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Tensor as_rows(const Tensor& x) {
  return x.rank() == 1 ? t::reshape(x, t::Shape{1, x.size()}) : x;
}

}  // namespace

constexpr double kMdnOutputInitScale = 0.01;

PredictorHead::PredictorHead(Kind kind, std::size_t in_width, std::size_t out_width,
                             const std::vector<std::size_t>& hidden, std::size_t components, Rng& rng)
    : kind_(kind), in_width_(in_width), out_width_(out_width), components_(components) {
  if (components == 0) throw ConfigError("mixture component count must be at least 1");
  if (kind == Kind::mdn) {
    // One trunk; the output row is [K logits | K·M means | K log-variances].
    mean_net_ = t::Mlp(in_width, hidden, components * (out_width + 2), t::Activation::identity, rng);
    // Start every component near the same place with equal weight. Large random output
    // weights let one component take all the responsibility early and starve the rest.
    auto& last = mean_net_.layers().back();
    for (double& w : last.weights.mutable_data()) w *= kMdnOutputInitScale;
    for (double& b : last.bias.mutable_data()) b = 0.0;
  } else {
    mean_net_ = t::Mlp(in_width, hidden, out_width, t::Activation::identity, rng);
  }
}

PredictorHead::Output PredictorHead::forward(const Tensor& condition) const {
  const Tensor cond = as_rows(condition);
  Output out;
  if (kind_ == Kind::mlp) {
    out.means = mean_net_.forward(cond);
    require_finite(out.means, "predictor mlp");
    out.log_weights = Tensor::zeros(t::Shape{cond.rows(), 1});
    return out;
  }
  auto raw = mean_net_.forward(cond);
  require_finite(raw, "mdn network");
  const std::size_t k = components_;
  auto logits = t::slice_cols(raw, 0, k);
  out.means = t::slice_cols(raw, k, k * out_width_);
  auto raw_logvar = t::slice_cols(raw, k + k * out_width_, k);
  out.log_weights = t::log_softmax(logits);
  out.logvars = t::clamp(raw_logvar, t::kExpClampLo, t::kExpClampHi);
  return out;
}

Tensor PredictorHead::log_likelihood(const Tensor& condition, const Tensor& x, double beta) const {
  return log_likelihood(forward(condition), x, beta);
}

Tensor PredictorHead::log_likelihood(const Output& out, const Tensor& x_in, double beta) const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("annealing beta must lie in (0, 1], got " + std::to_string(beta));
  const Tensor x = as_rows(x_in);
  if (x.cols() != out_width_) {
    throw DimensionError("predictor target width " + std::to_string(x.cols()) + ", expected " +
                         std::to_string(out_width_));
  }
  const double m = static_cast<double>(out_width_);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  if (kind_ == Kind::mlp) {
    auto sq = t::sum_cols(t::square(t::sub(out.means, x)));
    return t::add_scalar(t::scale(sq, -0.5), -0.5 * m * log_two_pi);
  }
  auto dist2 = t::group_sum_cols(t::square(t::sub(out.means, t::tile_cols(x, components_))), out_width_);
  auto log_normal = t::sub(t::scale(t::add_scalar(out.logvars, log_two_pi), -0.5 * m),
                           t::scale(t::mul(dist2, t::exp(t::scale(out.logvars, -1.0))), 0.5));
  auto joint = t::add(out.log_weights, log_normal);
  if (beta == 1.0) return t::logsumexp_rows(joint);
  return t::scale(t::logsumexp_rows(t::scale(joint, beta)), 1.0 / beta);
}

std::vector<MixtureDensity> PredictorHead::mixtures(const Tensor& condition) const {
  t::NoGradGuard guard;
  const Output out = forward(condition);
  const std::size_t rows = out.means.rows();
  const std::size_t k = components();
  std::vector<MixtureDensity> result(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    MixtureDensity& mix = result[r];
    mix.weights.resize(k);
    mix.means.assign(k, std::vector<double>(out_width_));
    mix.variances.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      mix.weights[c] = std::exp(out.log_weights.at(r, c));
      for (std::size_t d = 0; d < out_width_; ++d) mix.means[c][d] = out.means.at(r, c * out_width_ + d);
      mix.variances[c] = kind_ == Kind::mdn ? std::exp(out.logvars.at(r, c)) : 0.0;
    }
    // exp(log_softmax) can drift from 1 by a few ulps; renormalise so validate() is exact.
    double total = 0.0;
    for (double w : mix.weights) total += w;
    for (double& w : mix.weights) w /= total;
  }
  return result;
}

std::vector<std::pair<std::string, const t::Mlp*>> PredictorHead::subnets() const {
  if (kind_ == Kind::mlp) return {{"predictor.mlp", &mean_net_}};
  return {{"predictor.mdn", &mean_net_}};
}

std::vector<std::pair<std::string, t::Mlp*>> PredictorHead::subnets() {
  if (kind_ == Kind::mlp) return {{"predictor.mlp", &mean_net_}};
  return {{"predictor.mdn", &mean_net_}};
}

std::vector<Tensor> PredictorHead::parameters() const {
  return mean_net_.parameters();
}

Tensor MaskedBatch::observed() const {
  return t::mul(y, t::add_scalar(t::scale(hidden, -1.0), 1.0));
}

Tensor MaskedBatch::merge(const Tensor& imputed) const {
  return t::add(observed().detach(), t::mul(imputed, hidden));
}

CvaeImputer::CvaeImputer(std::size_t target_width, std::size_t indicator_width, std::size_t latent_dim,
                         const std::vector<std::size_t>& hidden, Rng& rng)
    : target_width_(target_width), latent_dim_(latent_dim) {
  const std::size_t in = target_width + indicator_width;
  recognition_mean_ = t::Mlp(in, hidden, latent_dim, t::Activation::identity, rng);
  recognition_logvar_ = t::Mlp(in, hidden, latent_dim, t::Activation::identity, rng);
  std::vector<std::size_t> reversed(hidden.rbegin(), hidden.rend());
  generation_ = t::Mlp(in + latent_dim, reversed, 2 * target_width, t::Activation::identity, rng);
}

std::pair<Tensor, Tensor> CvaeImputer::encode(const MaskedBatch& batch) const {
  auto input = t::concat_cols({batch.y, batch.indicators});
  auto mu = recognition_mean_.forward(input);
  require_finite(mu, "cvae recognition mean net");
  auto lv = recognition_logvar_.forward(input);
  require_finite(lv, "cvae recognition log-variance net");
  return {mu, t::clamp(lv, -kLogVarClamp, kLogVarClamp)};
}

std::pair<Tensor, Tensor> CvaeImputer::decode(const MaskedBatch& batch, const Tensor& z) const {
  if (z.cols() != latent_dim_ || z.rows() != batch.rows()) {
    throw DimensionError("cvae decode: latent " + t::shape_string(z.shape()) + " for batch of " +
                         std::to_string(batch.rows()) + " with latent width " + std::to_string(latent_dim_));
  }
  auto out = generation_.forward(t::concat_cols({batch.observed().detach(), batch.indicators, z}));
  require_finite(out, "cvae generation net");
  auto mean = t::slice_cols(out, 0, target_width_);
  auto lv = t::clamp(t::slice_cols(out, target_width_, target_width_), -kLogVarClamp, kLogVarClamp);
  return {mean, lv};
}

std::vector<std::pair<std::string, const t::Mlp*>> CvaeImputer::subnets() const {
  return {{"cvae.recognition_mean", &recognition_mean_},
          {"cvae.recognition_logvar", &recognition_logvar_},
          {"cvae.generation", &generation_}};
}

std::vector<std::pair<std::string, t::Mlp*>> CvaeImputer::subnets() {
  return {{"cvae.recognition_mean", &recognition_mean_},
          {"cvae.recognition_logvar", &recognition_logvar_},
          {"cvae.generation", &generation_}};
}

std::vector<Tensor> CvaeImputer::recognition_parameters() const {
  return concat_params({&recognition_mean_, &recognition_logvar_});
}

std::vector<Tensor> CvaeImputer::generation_parameters() const { return generation_.parameters(); }

CganImputer::CganImputer(std::size_t target_width, std::size_t indicator_width, std::size_t latent_dim,
                         const std::vector<std::size_t>& hidden, Rng& rng)
    : latent_dim_(latent_dim) {
  const std::size_t in = target_width + indicator_width;
  generator_ = t::Mlp(in + latent_dim, hidden, target_width, t::Activation::identity, rng);
  discriminator_ = t::Mlp(in, hidden, 1, t::Activation::identity, rng);
}

Tensor CganImputer::generate(const MaskedBatch& batch, const Tensor& z) const {
  if (z.cols() != latent_dim_ || z.rows() != batch.rows()) {
    throw DimensionError("cgan generate: latent " + t::shape_string(z.shape()) + " for batch of " +
                         std::to_string(batch.rows()));
  }
  auto out = generator_.forward(t::concat_cols({batch.observed().detach(), batch.indicators, z}));
  require_finite(out, "cgan generator");
  return out;
}

Tensor CganImputer::discriminate(const MaskedBatch& batch, const Tensor& candidate_full) const {
  auto logit = discriminator_.forward(t::concat_cols({candidate_full, batch.indicators}));
  require_finite(logit, "cgan discriminator");
  return t::sigmoid(logit);
}

std::vector<std::pair<std::string, const t::Mlp*>> CganImputer::subnets() const {
  return {{"cgan.generator", &generator_}, {"cgan.discriminator", &discriminator_}};
}

std::vector<std::pair<std::string, t::Mlp*>> CganImputer::subnets() {
  return {{"cgan.generator", &generator_}, {"cgan.discriminator", &discriminator_}};
}

std::vector<Tensor> CganImputer::generator_parameters() const { return generator_.parameters(); }
std::vector<Tensor> CganImputer::discriminator_parameters() const { return discriminator_.parameters(); }

}  // namespace forge::models
