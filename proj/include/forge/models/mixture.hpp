#pragma once

#include <span>
#include <vector>

#include "forge/tensor/tensor.hpp"

namespace forge::models {

/// K weighted isotropic Gaussians over an M-dimensional space.
struct MixtureDensity {
  std::vector<double> weights;             // K, non-negative, sum 1
  std::vector<std::vector<double>> means;  // K × M
  std::vector<double> variances;           // K, each > 0 (0 only for point-mass predictors)

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  /// True when every variance is zero: the output of a deterministic predictor.
  bool is_point_mass() const;

  /// Throws ContractError if weights are not a probability vector (1e-9) or shapes disagree.
  void validate(bool allow_point_mass = false) const;
};

/// log Σ_k α_k N(x; μ_k, σ_k² I), evaluated by log-sum-exp.
double mdn_log_density(const MixtureDensity& mix, std::span<const double> x);

/// KL(N(μ, diag σ²) ‖ N(0, I)) = ½ Σ (σ² + μ² − 1 − ln σ²). Throws DomainError if σ² ≤ 0.
double kl_diag_gaussian(std::span<const double> mu, std::span<const double> sigma2);

/// z = μ + σ ⊙ ε.
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> epsilon);

// Tape versions used inside the training objectives.

/// Per-row KL to the standard normal from a log-variance parameterisation: [b × 1].
tensor::Tensor kl_diag_gaussian(const tensor::Tensor& mu, const tensor::Tensor& logvar);
/// μ + σ ⊙ ε with ε a constant; gradients reach μ and σ only.
tensor::Tensor reparameterize(const tensor::Tensor& mu, const tensor::Tensor& sigma,
                              const tensor::Tensor& epsilon);
/// Per-row Σ_d mask_d · log N(x_d; mean_d, exp(logvar_d)): [b × 1]. Pass an all-ones
/// mask to score every entry.
tensor::Tensor diag_gaussian_log_likelihood(const tensor::Tensor& x, const tensor::Tensor& mean,
                                            const tensor::Tensor& logvar, const tensor::Tensor& mask);

}  // namespace forge::models
