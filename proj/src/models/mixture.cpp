#include "forge/models/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"

namespace forge::models {

namespace t = forge::tensor;

bool MixtureDensity::is_point_mass() const {
  return !variances.empty() &&
         std::all_of(variances.begin(), variances.end(), [](double v) { return v == 0.0; });
}

void MixtureDensity::validate(bool allow_point_mass) const {
  const std::size_t k = weights.size();
  if (k == 0) throw ContractError("mixture has no components");
  if (means.size() != k || variances.size() != k) {
    throw ContractError("mixture component arrays disagree: " + std::to_string(k) + " weights, " +
                        std::to_string(means.size()) + " means, " + std::to_string(variances.size()) +
                        " variances");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("mixture weight is negative or NaN");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractError("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
  const std::size_t m = means.front().size();
  for (const auto& mu : means) {
    if (mu.size() != m) throw ContractError("mixture means have inconsistent dimension");
  }
  const bool point = allow_point_mass && is_point_mass();
  if (!point) {
    for (double v : variances) {
      if (!(v > 0.0)) throw ContractError("mixture variance must be strictly positive");
    }
  }
}

double mdn_log_density(const MixtureDensity& mix, std::span<const double> x) {
  mix.validate();
  const std::size_t m = mix.dim();
  if (x.size() != m) {
    throw DimensionError("mdn_log_density: point of dimension " + std::to_string(x.size()) +
                         " for mixture of dimension " + std::to_string(m));
  }
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> terms(mix.components());
  for (std::size_t k = 0; k < mix.components(); ++k) {
    double sq = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
      const double diff = x[d] - mix.means[k][d];
      sq += diff * diff;
    }
    const double var = mix.variances[k];
    const double log_w = mix.weights[k] > 0.0 ? std::log(mix.weights[k])
                                              : -std::numeric_limits<double>::infinity();
    terms[k] = log_w - 0.5 * static_cast<double>(m) * (log_two_pi + std::log(var)) - 0.5 * sq / var;
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(mx)) return mx;
  double total = 0.0;
  for (double v : terms) total += std::exp(v - mx);
  return mx + std::log(total);
}

double kl_diag_gaussian(std::span<const double> mu, std::span<const double> sigma2) {
  if (mu.size() != sigma2.size()) {
    throw DimensionError("kl_diag_gaussian: " + std::to_string(mu.size()) + " means vs " +
                         std::to_string(sigma2.size()) + " variances");
  }
  double kl = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    if (!(sigma2[d] > 0.0)) throw DomainError("kl_diag_gaussian: non-positive variance");
    kl += sigma2[d] + mu[d] * mu[d] - 1.0 - std::log(sigma2[d]);
  }
  return 0.5 * kl;
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> epsilon) {
  if (mu.size() != sigma.size() || mu.size() != epsilon.size()) {
    throw DimensionError("reparameterize: lengths " + std::to_string(mu.size()) + ", " +
                         std::to_string(sigma.size()) + ", " + std::to_string(epsilon.size()));
  }
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sigma[i] * epsilon[i];
  return z;
}

t::Tensor kl_diag_gaussian(const t::Tensor& mu, const t::Tensor& logvar) {
  // ½ Σ (exp(lv) + μ² − 1 − lv)
  auto inner = t::sub(t::add(t::exp(logvar), t::square(mu)), t::add_scalar(logvar, 1.0));
  return t::scale(t::sum_cols(inner), 0.5);
}

t::Tensor reparameterize(const t::Tensor& mu, const t::Tensor& sigma, const t::Tensor& epsilon) {
  if (mu.shape() != sigma.shape() || mu.shape() != epsilon.shape()) {
    throw DimensionError("reparameterize: shapes " + t::shape_string(mu.shape()) + ", " +
                         t::shape_string(sigma.shape()) + ", " + t::shape_string(epsilon.shape()));
  }
  return t::add(mu, t::mul(sigma, epsilon.detach()));
}

t::Tensor diag_gaussian_log_likelihood(const t::Tensor& x, const t::Tensor& mean,
                                       const t::Tensor& logvar, const t::Tensor& mask) {
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  auto sq = t::square(t::sub(x, mean));
  auto per_entry = t::add(t::add_scalar(logvar, log_two_pi), t::mul(sq, t::exp(t::scale(logvar, -1.0))));
  return t::scale(t::sum_cols(t::mul(per_entry, mask)), -0.5);
}

}  // namespace forge::models
