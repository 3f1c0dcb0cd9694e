#pragma once

#include <string>
#include <utility>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/models/mixture.hpp"
#include "forge/tensor/nn.hpp"

namespace forge::models {

using tensor::Tensor;

/// Clamp range for decoder and recognition log-variances.
inline constexpr double kLogVarClamp = 10.0;

/// Maps a condition vector to a density over designs: either a deterministic MLP
/// (scored as a unit-variance Gaussian) or a K-component mixture density network.
class PredictorHead {
 public:
  enum class Kind { mlp, mdn };

  struct Output {
    Tensor log_weights;  // [b × K]; MLP: [b × 1] of zeros
    Tensor means;        // [b × K·M]
    Tensor logvars;      // [b × K], clamped; undefined for MLP
  };

  PredictorHead() = default;
  PredictorHead(Kind kind, std::size_t in_width, std::size_t out_width,
                const std::vector<std::size_t>& hidden, std::size_t components, Rng& rng);

  Kind kind() const { return kind_; }
  std::size_t in_width() const { return in_width_; }
  std::size_t out_width() const { return out_width_; }
  std::size_t components() const { return kind_ == Kind::mdn ? components_ : 1; }

  /// Throws NumericError naming the sub-network if any output is non-finite.
  Output forward(const Tensor& condition) const;
  /// Per-row log P(x | condition): [b × 1]. With beta < 1 the mixture sum is tempered,
  /// (1/β)·log Σ_k (α_k N_k)^β, which pulls responsibilities and weights toward uniform.
  /// beta = 1 is the plain likelihood; the MLP head ignores beta.
  Tensor log_likelihood(const Tensor& condition, const Tensor& x, double beta = 1.0) const;
  Tensor log_likelihood(const Output& out, const Tensor& x, double beta = 1.0) const;
  /// Mixtures per row in the head's own (standardized) space; MLP rows are point masses.
  std::vector<MixtureDensity> mixtures(const Tensor& condition) const;

  std::vector<std::pair<std::string, const tensor::Mlp*>> subnets() const;
  std::vector<std::pair<std::string, tensor::Mlp*>> subnets();
  std::vector<Tensor> parameters() const;

 private:
  Kind kind_ = Kind::mlp;
  std::size_t in_width_ = 0;
  std::size_t out_width_ = 0;
  std::size_t components_ = 1;
  // MLP kind: M outputs. MDN kind: K mixture logits, K·M means and K log-variances.
  tensor::Mlp mean_net_;
};

/// Rows of a masked target batch. `hidden` is 1 where an entry is unspecified.
struct MaskedBatch {
  Tensor y;           // [b × D] standardized targets; hidden entries may hold anything
  Tensor hidden;      // [b × D]
  Tensor indicators;  // [b × I] mask summary fed to the imputer networks

  std::size_t rows() const { return y.rows(); }
  /// y with hidden entries zeroed (the v part in a fixed layout).
  Tensor observed() const;
  /// Observed entries of y, hidden entries from `imputed`.
  Tensor merge(const Tensor& imputed) const;
};

/// Conditional VAE over the hidden part h given the observed part v.
class CvaeImputer {
 public:
  CvaeImputer() = default;
  CvaeImputer(std::size_t target_width, std::size_t indicator_width, std::size_t latent_dim,
              const std::vector<std::size_t>& hidden, Rng& rng);

  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t target_width() const { return target_width_; }

  /// Q_φ(z | h, v): mean and clamped log-variance, each [b × L].
  std::pair<Tensor, Tensor> encode(const MaskedBatch& batch) const;
  /// P_θ(h | z, v): mean and clamped log-variance over the full target layout, each [b × D].
  std::pair<Tensor, Tensor> decode(const MaskedBatch& batch, const Tensor& z) const;

  std::vector<std::pair<std::string, const tensor::Mlp*>> subnets() const;
  std::vector<std::pair<std::string, tensor::Mlp*>> subnets();
  std::vector<Tensor> recognition_parameters() const;
  std::vector<Tensor> generation_parameters() const;

 private:
  std::size_t target_width_ = 0;
  std::size_t latent_dim_ = 0;
  tensor::Mlp recognition_mean_;
  tensor::Mlp recognition_logvar_;
  tensor::Mlp generation_;  // outputs [mean | logvar]
};

/// Conditional GAN imputer: generator G_θ(z, v) and discriminator D_η(h | v).
class CganImputer {
 public:
  CganImputer() = default;
  CganImputer(std::size_t target_width, std::size_t indicator_width, std::size_t latent_dim,
              const std::vector<std::size_t>& hidden, Rng& rng);

  std::size_t latent_dim() const { return latent_dim_; }

  /// Generated targets over the full layout: [b × D].
  Tensor generate(const MaskedBatch& batch, const Tensor& z) const;
  /// Discriminator probability that `candidate_full` (observed + hidden) is real: [b × 1],
  /// strictly inside (0, 1) before loss clamping.
  Tensor discriminate(const MaskedBatch& batch, const Tensor& candidate_full) const;

  std::vector<std::pair<std::string, const tensor::Mlp*>> subnets() const;
  std::vector<std::pair<std::string, tensor::Mlp*>> subnets();
  std::vector<Tensor> generator_parameters() const;
  std::vector<Tensor> discriminator_parameters() const;

 private:
  std::size_t latent_dim_ = 0;
  tensor::Mlp generator_;
  tensor::Mlp discriminator_;
};

}  // namespace forge::models
