#include "forge/models/losses.hpp"

#include <string>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"

namespace forge::models {

namespace t = forge::tensor;

namespace {

void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0)) {
    throw ConfigError("lambda must be > 0, got " + std::to_string(lambda));
  }
}

t::Tensor clamped_log(const t::Tensor& p) {
  return t::log(t::clamp(p, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp));
}

// Per-row ELBO and the decoder mean used for imputation.
std::pair<t::Tensor, t::Tensor> elbo_rows(const CvaeImputer& cvae, const MaskedBatch& batch,
                                          const t::Tensor& epsilon) {
  auto [mu, logvar] = cvae.encode(batch);
  auto sigma = t::exp(t::scale(logvar, 0.5));
  auto z = reparameterize(mu, sigma, epsilon);
  auto [mean, dec_logvar] = cvae.decode(batch, z);
  auto loglik = diag_gaussian_log_likelihood(batch.y, mean, dec_logvar, batch.hidden);
  return {t::sub(loglik, kl_diag_gaussian(mu, logvar)), mean};
}

}  // namespace

t::Tensor mdn_nll(const PredictorHead& head, const t::Tensor& condition, const t::Tensor& x, double beta) {
  return t::scale(t::mean(head.log_likelihood(condition, x, beta)), -1.0);
}

t::Tensor cvae_elbo(const CvaeImputer& cvae, const MaskedBatch& batch, const t::Tensor& epsilon) {
  return t::mean(elbo_rows(cvae, batch, epsilon).first);
}

t::Tensor hybrid_cvae_objective(const CvaeImputer& cvae, const PredictorHead& predictor,
                                const MaskedBatch& batch, const t::Tensor& x, double lambda,
                                const t::Tensor& epsilon, HybridTerms terms) {
  require_positive_lambda(lambda);
  auto [elbo, h_bar] = elbo_rows(cvae, batch, epsilon);
  if (!terms.predictive) return t::mean(elbo);
  auto design = t::scale(predictor.log_likelihood(batch.merge(h_bar), x, terms.beta), lambda);
  if (!terms.generative) return t::mean(design);
  return t::mean(t::add(elbo, design));
}

CganLosses cgan_losses(const CganImputer& cgan, const MaskedBatch& batch, const t::Tensor& z) {
  auto fake = batch.merge(cgan.generate(batch, z));
  auto d_real = cgan.discriminate(batch, batch.y);
  auto d_fake_detached = cgan.discriminate(batch, fake.detach());
  auto real_term = clamped_log(d_real);
  auto fake_term = clamped_log(t::add_scalar(t::scale(d_fake_detached, -1.0), 1.0));
  CganLosses out;
  out.disc_loss = t::scale(t::mean(t::add(real_term, fake_term)), -1.0);
  out.gen_loss = t::scale(t::mean(clamped_log(cgan.discriminate(batch, fake))), -1.0);
  return out;
}

HybridCganLosses hybrid_cgan_loss(const CganImputer& cgan, const PredictorHead& predictor,
                                  const MaskedBatch& batch, const t::Tensor& x, const t::Tensor& z,
                                  double lambda, HybridTerms terms) {
  require_positive_lambda(lambda);
  auto generated = cgan.generate(batch, z);
  auto fake = batch.merge(generated);

  HybridCganLosses out;
  auto d_real = cgan.discriminate(batch, batch.y);
  auto d_fake_detached = cgan.discriminate(batch, fake.detach());
  out.disc_loss = t::scale(
      t::mean(t::add(clamped_log(d_real), clamped_log(t::add_scalar(t::scale(d_fake_detached, -1.0), 1.0)))),
      -1.0);

  const auto adversarial = [&] { return clamped_log(cgan.discriminate(batch, fake)); };
  if (!terms.predictive) {
    out.joint_objective = t::mean(adversarial());
    return out;
  }
  auto design = t::scale(predictor.log_likelihood(fake, x, terms.beta), lambda);
  out.joint_objective = terms.generative ? t::mean(t::add(adversarial(), design)) : t::mean(design);
  return out;
}

}  // namespace forge::models
