#include "forge/models/bundle.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common/errors.hpp"

namespace forge::models {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::rf: return "rf";
    case ModelKind::mlp: return "mlp";
    case ModelKind::mdn: return "mdn";
    case ModelKind::cvae_mlp: return "cvae_mlp";
    case ModelKind::cvae_mdn: return "cvae_mdn";
    case ModelKind::cgan_mlp: return "cgan_mlp";
    case ModelKind::cgan_mdn: return "cgan_mdn";
  }
  return "mlp";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : {ModelKind::rf, ModelKind::mlp, ModelKind::mdn, ModelKind::cvae_mlp,
                      ModelKind::cvae_mdn, ModelKind::cgan_mlp, ModelKind::cgan_mdn}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model_kind '" + name +
                    "' (expected rf, mlp, mdn, cvae_mlp, cvae_mdn, cgan_mlp or cgan_mdn)");
}

bool uses_cvae(ModelKind k) { return k == ModelKind::cvae_mlp || k == ModelKind::cvae_mdn; }
bool uses_cgan(ModelKind k) { return k == ModelKind::cgan_mlp || k == ModelKind::cgan_mdn; }
bool is_hybrid(ModelKind k) { return uses_cvae(k) || uses_cgan(k); }
bool uses_mdn_head(ModelKind k) {
  return k == ModelKind::mdn || k == ModelKind::cvae_mdn || k == ModelKind::cgan_mdn;
}

Standardizer Standardizer::fit(const RowMatrix& rows) {
  Standardizer s;
  const auto n = static_cast<double>(rows.rows());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    double mean = 0.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) mean += rows(r, c);
    mean /= n;
    double var = 0.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) var += (rows(r, c) - mean) * (rows(r, c) - mean);
    const double sd = std::sqrt(var / n);
    if (sd > 1e-12) {
      s.mean.push_back(mean);
      s.scale.push_back(sd);
    } else {
      s.mean.push_back(0.0);
      s.scale.push_back(1.0);
    }
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t width) {
  return Standardizer{std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

void Standardizer::transform(std::span<double> row) const {
  if (row.size() != mean.size()) {
    throw DimensionError("standardizer width " + std::to_string(mean.size()) + ", row width " +
                         std::to_string(row.size()));
  }
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = (row[i] - mean[i]) / scale[i];
}

void Standardizer::inverse(std::span<double> row) const {
  if (row.size() != mean.size()) {
    throw DimensionError("standardizer width " + std::to_string(mean.size()) + ", row width " +
                         std::to_string(row.size()));
  }
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = row[i] * scale[i] + mean[i];
}

RowMatrix Standardizer::transform(const RowMatrix& rows) const {
  RowMatrix out = rows;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    transform(std::span<double>(out.row(r).data(), static_cast<std::size_t>(out.cols())));
  }
  return out;
}

ModelBundle ModelBundle::create(ModelKind kind, const ArchConfig& arch, std::uint64_t seed) {
  ModelBundle b;
  b.kind = kind;
  b.arch = arch;
  b.input_scaler = Standardizer::identity(arch.target_width);
  b.design_scaler = Standardizer::identity(arch.design_width);
  if (kind == ModelKind::rf) {
    b.forest.emplace();
    return b;
  }
  Rng rng(seed);
  if (uses_cvae(kind)) {
    b.cvae.emplace(arch.target_width, arch.indicator_width, arch.latent_dim, arch.hidden, rng);
  } else if (uses_cgan(kind)) {
    b.cgan.emplace(arch.target_width, arch.indicator_width, arch.latent_dim, arch.hidden, rng);
  }
  const auto head = uses_mdn_head(kind) ? PredictorHead::Kind::mdn : PredictorHead::Kind::mlp;
  b.predictor.emplace(head, b.predictor_input_width(), arch.design_width, arch.hidden, arch.components, rng);
  return b;
}

std::size_t ModelBundle::predictor_input_width() const {
  // Hybrid predictors see a completed diagram; plain ones see the masked diagram plus the
  // mask summary.
  return is_hybrid(kind) ? arch.target_width : arch.target_width + arch.indicator_width;
}

std::vector<std::pair<std::string, const tensor::Mlp*>> ModelBundle::subnets() const {
  std::vector<std::pair<std::string, const tensor::Mlp*>> out;
  if (cvae) {
    for (auto& e : cvae->subnets()) out.push_back(e);
  }
  if (cgan) {
    for (auto& e : cgan->subnets()) out.push_back(e);
  }
  if (predictor) {
    for (auto& e : predictor->subnets()) out.push_back(e);
  }
  return out;
}

std::vector<std::pair<std::string, tensor::Mlp*>> ModelBundle::subnets() {
  std::vector<std::pair<std::string, tensor::Mlp*>> out;
  if (cvae) {
    for (auto& e : cvae->subnets()) out.push_back(e);
  }
  if (cgan) {
    for (auto& e : cgan->subnets()) out.push_back(e);
  }
  if (predictor) {
    for (auto& e : predictor->subnets()) out.push_back(e);
  }
  return out;
}

std::vector<double> design_log_features(std::span<const double> x) {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = std::log1p(x[i] / kDesignLogOffset);
  return t;
}

std::vector<double> encode_design(const ModelBundle& bundle, std::span<const double> x) {
  auto t = design_log_features(x);
  bundle.design_scaler.transform(t);
  return t;
}

std::vector<double> decode_design(const ModelBundle& bundle, std::span<const double> s) {
  std::vector<double> x(s.begin(), s.end());
  bundle.design_scaler.inverse(x);
  for (double& v : x) v = kDesignLogOffset * std::expm1(v);
  return x;
}

double design_log_jacobian(const ModelBundle& bundle, std::span<const double> x) {
  if (x.size() != bundle.design_scaler.width()) throw DimensionError("design width does not match the model");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total -= std::log(bundle.design_scaler.scale[i] * (kDesignLogOffset + std::max(x[i], 0.0)));
  }
  return total;
}

}  // namespace forge::models
