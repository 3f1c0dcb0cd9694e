#pragma once

#include "forge/models/networks.hpp"

// Training objectives. Every function averages over the rows of its batch and returns a
// scalar tensor wired to the tape. Objectives named *_objective / elbo are to be maximized;
// *_loss values are to be minimized.
namespace forge::models {

/// Mean of −log P_γ(x | condition); beta < 1 tempers the mixture (see log_likelihood).
Tensor mdn_nll(const PredictorHead& head, const Tensor& condition, const Tensor& x, double beta = 1.0);

/// Lower bound −KL(Q_φ(z|h,v) ‖ N(0,I)) + log P_θ(h | z, v), z = μ_φ + σ_φ ε.
/// The log-likelihood covers hidden entries only.
Tensor cvae_elbo(const CvaeImputer& cvae, const MaskedBatch& batch, const Tensor& epsilon);

struct HybridTerms {
  bool generative = true;  // include the imputer's own objective
  bool predictive = true;  // include the λ-weighted design likelihood
  double beta = 1.0;       // mixture tempering of the design likelihood
};

/// ELBO + λ · log P_{γ,θ}(x | v, h̄) with h̄ = μ(v, z) and z drawn from Q_φ by
/// reparameterisation. The predictor sees the observed entries merged with h̄.
/// Throws ConfigError if λ ≤ 0.
Tensor hybrid_cvae_objective(const CvaeImputer& cvae, const PredictorHead& predictor,
                             const MaskedBatch& batch, const Tensor& x, double lambda,
                             const Tensor& epsilon, HybridTerms terms = {});

/// Discriminator probabilities are clamped to this margin before taking logs.
inline constexpr double kDiscriminatorClamp = 1e-7;

struct CganLosses {
  Tensor disc_loss;  // −[log D(h|v) + log(1 − D(G(z,v)|v))], minimized over η
  Tensor gen_loss;   // −log D(G(z,v)|v), non-saturating, minimized over θ
};

CganLosses cgan_losses(const CganImputer& cgan, const MaskedBatch& batch, const Tensor& z);

struct HybridCganLosses {
  Tensor disc_loss;        // as cgan_losses, generator output detached
  Tensor joint_objective;  // log D(G(z,v)|v) + λ log P_{γ,θ}(x | v, G(z,v)), maximized over θ, γ
};

/// Throws ConfigError if λ ≤ 0.
HybridCganLosses hybrid_cgan_loss(const CganImputer& cgan, const PredictorHead& predictor,
                                  const MaskedBatch& batch, const Tensor& x, const Tensor& z,
                                  double lambda, HybridTerms terms = {});

}  // namespace forge::models
