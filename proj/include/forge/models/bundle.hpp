#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/models/forest.hpp"
#include "forge/models/networks.hpp"

namespace forge::models {

enum class ModelKind { rf, mlp, mdn, cvae_mlp, cvae_mdn, cgan_mlp, cgan_mdn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
bool uses_cvae(ModelKind kind);
bool uses_cgan(ModelKind kind);
bool is_hybrid(ModelKind kind);
bool uses_mdn_head(ModelKind kind);

/// Per-feature affine standardization. Zero-variance features pass through unchanged
/// (scale 1, offset 0).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const RowMatrix& rows);
  static Standardizer identity(std::size_t width);
  std::size_t width() const { return mean.size(); }
  void transform(std::span<double> row) const;
  void inverse(std::span<double> row) const;
  RowMatrix transform(const RowMatrix& rows) const;
};

struct ArchConfig {
  std::size_t target_width = 0;     // D: flattened phase diagram
  std::size_t indicator_width = 0;  // mask summary columns; 0 for models trained on full input
  std::size_t design_width = 0;     // M: composition length
  std::vector<std::size_t> hidden{500, 100, 50};
  std::size_t latent_dim = 30;
  std::size_t components = 5;
};

/// Trained parameter sets plus everything needed to run them on raw data.
struct ModelBundle {
  ModelKind kind = ModelKind::mlp;
  ArchConfig arch;
  Standardizer input_scaler;   // over the D target features
  Standardizer design_scaler;  // over the M composition entries
  std::optional<PredictorHead> predictor;
  std::optional<CvaeImputer> cvae;
  std::optional<CganImputer> cgan;
  std::optional<ForestModel> forest;

  static ModelBundle create(ModelKind kind, const ArchConfig& arch, std::uint64_t seed);

  /// Input width the predictor head expects.
  std::size_t predictor_input_width() const;
  /// Every network, named and in a fixed order; this order defines the weight blob layout.
  std::vector<std::pair<std::string, const tensor::Mlp*>> subnets() const;
  std::vector<std::pair<std::string, tensor::Mlp*>> subnets();
};

/// Designs are modelled in the space s = standardize(ln(1 + x / kDesignLogOffset)), so a
/// given relative change weighs about the same for trace and major elements.
inline constexpr double kDesignLogOffset = 0.01;

/// ln(1 + x / offset) per entry, before standardization.
std::vector<double> design_log_features(std::span<const double> x);
/// Raw design → model space (log features, then the bundle's design scaler).
std::vector<double> encode_design(const ModelBundle& bundle, std::span<const double> x);
/// Model space → raw design. No clipping: entries may come out slightly negative.
std::vector<double> decode_design(const ModelBundle& bundle, std::span<const double> s);
/// Σ ln |ds_i / dx_i| at x; converts a density over s into a density over x.
double design_log_jacobian(const ModelBundle& bundle, std::span<const double> x);

}  // namespace forge::models
