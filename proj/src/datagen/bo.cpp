#include "forge/datagen/bo.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "forge/common/errors.hpp"
#include "forge/common/matrix.hpp"

namespace forge::datagen {

BOObjectiveConfig BOObjectiveConfig::for_spec(const sim::SimulatorSpec& spec) {
  BOObjectiveConfig cfg;
  std::tie(cfg.line_a, cfg.line_b) = sim::fit_fcc_line(spec);
  return cfg;
}

double line_distance(double y200, double y500, const BOObjectiveConfig& cfg) {
  return std::abs(y500 - cfg.line_a * y200 - cfg.line_b) / std::sqrt(1.0 + cfg.line_a * cfg.line_a);
}

BOTerms bo_terms(double y200, double y500, const sim::Composition& x, const BOObjectiveConfig& cfg) {
  BOTerms t;
  t.d1 = line_distance(y200, y500, cfg);
  t.d2 = y200 - cfg.cutoff;
  t.l1 = t.d1 < cfg.d1_threshold ? 0.0 : t.d1 * t.d1;
  t.l2 = t.d2 > 0.0 ? 0.0 : t.d2 * t.d2;
  for (const auto& [v200, v500] : cfg.visited) {
    const double dist2 = (v200 - y200) * (v200 - y200) + (v500 - y500) * (v500 - y500);
    t.l3 = std::max(t.l3, std::exp(-dist2 / cfg.sigma2));
  }
  for (std::size_t e = 0; e < sim::kElements; ++e) {
    if (e != sim::kAluminium && x[e] > 1e-6) t.l4 += 1.0;
  }
  t.total = cfg.w1 * t.l1 + cfg.w2 * t.l2 + cfg.w3 * t.l3 + cfg.w4 * t.l4;
  return t;
}

double bo_objective(double y200, double y500, const sim::Composition& x, const BOObjectiveConfig& cfg) {
  return bo_terms(y200, y500, x, cfg).total;
}

bool in_target_region(double y200, double y500, const BOObjectiveConfig& cfg) {
  return line_distance(y200, y500, cfg) < cfg.d1_threshold && y200 - cfg.cutoff > 0.0;
}

double expected_improvement(double mean, double sd, double best) {
  if (sd <= 0.0) return std::max(best - mean, 0.0);
  const double z = (best - mean) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return (best - mean) * cdf + sd * pdf;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double median_length_scale(const std::vector<Evaluation>& evals) {
  std::vector<double> d;
  for (std::size_t i = 0; i < evals.size(); ++i)
    for (std::size_t j = i + 1; j < evals.size(); ++j) d.push_back(std::sqrt(squared_distance(evals[i].point, evals[j].point)));
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 1e-9 ? *mid : 1.0;
}

}  // namespace

std::vector<Evaluation> gp_ei_minimize(const std::function<double(std::span<const double>)>& f,
                                       const std::function<std::vector<double>(Rng&)>& sample, std::size_t dim,
                                       std::size_t budget, Rng& rng, const GpEiOptions& opts) {
  if (budget == 0) throw DomainError("search budget must be at least 1");
  std::vector<Evaluation> evals;
  const std::size_t initial = opts.initial > 0 ? std::min(opts.initial, budget) : std::min(budget, dim + 1);

  auto evaluate = [&](std::vector<double> p) {
    if (p.size() != dim) throw DimensionError("sampler returned a point of the wrong dimension");
    const double v = f(p);
    if (!std::isfinite(v)) throw NumericError("objective returned a non-finite value");
    evals.push_back({std::move(p), v});
  };

  for (std::size_t i = 0; i < initial; ++i) evaluate(sample(rng));

  while (evals.size() < budget) {
    const auto n = static_cast<Eigen::Index>(evals.size());
    const double ell = median_length_scale(evals);
    const double inv = 1.0 / (2.0 * ell * ell);

    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = evals[static_cast<std::size_t>(i)].value;
    const double mean = y.mean();
    double sd = std::sqrt((y.array() - mean).square().mean());
    if (sd < 1e-12) sd = 1.0;
    const Vector ys = (y.array() - mean) / sd;

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = std::exp(-inv * squared_distance(evals[static_cast<std::size_t>(i)].point,
                                                          evals[static_cast<std::size_t>(j)].point));
        k(i, j) = v;
        k(j, i) = v;
      }
    k.diagonal().array() += opts.noise;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    double jitter = opts.noise;
    while (llt.info() != Eigen::Success && jitter < 1e-2) {
      jitter *= 10.0;
      k.diagonal().array() += jitter;
      llt.compute(k);
    }
    if (llt.info() != Eigen::Success) throw NumericError("GP kernel matrix is not positive definite");
    const Vector alpha = llt.solve(ys);
    const double best = ys.minCoeff();

    std::vector<double> best_point;
    double best_ei = -1.0;
    Vector kx(n);
    for (std::size_t c = 0; c < opts.candidates; ++c) {
      auto p = sample(rng);
      for (Eigen::Index i = 0; i < n; ++i) kx[i] = std::exp(-inv * squared_distance(p, evals[static_cast<std::size_t>(i)].point));
      const double mu = kx.dot(alpha);
      const double var = std::max(1.0 - kx.dot(llt.solve(kx)), 0.0);
      const double ei = expected_improvement(mu, std::sqrt(var), best);
      if (ei > best_ei) {
        best_ei = ei;
        best_point = std::move(p);
      }
    }
    evaluate(std::move(best_point));
  }
  return evals;
}

std::vector<double> search_upper_bounds() {
  std::vector<double> upper(sim::kElements - 1, 0.0);
  for (const auto& alloy : sim::base_alloys()) {
    for (std::size_t e = 0; e + 1 < sim::kElements; ++e) upper[e] = std::max(upper[e], alloy.composition[e]);
  }
  for (double& u : upper) u *= 1.2;
  return upper;
}

void enforce_aux_cap(sim::Composition& x, double cap) {
  for (int attempt = 0; attempt < 8 && sim::auxiliary_sum(x) > cap; ++attempt) {
    const double factor = cap / sim::auxiliary_sum(x) * (1.0 - 1e-12 * (attempt + 1));
    for (std::size_t e = 0; e < sim::kElements; ++e)
      if (e != sim::kAluminium) x[e] *= factor;
  }
  x[sim::kAluminium] = 100.0 - sim::auxiliary_sum(x);
}

sim::Composition composition_from_unit(std::span<const double> t, const std::vector<double>& upper, double cap) {
  sim::Composition x{};
  for (std::size_t e = 0; e + 1 < sim::kElements; ++e) x[e] = std::clamp(t[e], 0.0, 1.0) * upper[e];
  enforce_aux_cap(x, cap);
  return x;
}

std::vector<double> composition_to_unit(const sim::Composition& x, const std::vector<double>& upper) {
  std::vector<double> t(upper.size());
  for (std::size_t e = 0; e < upper.size(); ++e) t[e] = upper[e] > 0 ? x[e] / upper[e] : 0.0;
  return t;
}

sim::Composition sample_feasible_composition(const std::vector<double>& upper, double cap, Rng& rng) {
  sim::Composition x{};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (std::size_t e = 0; e + 1 < sim::kElements; ++e) x[e] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, upper[e]);
    if (sim::auxiliary_sum(x) <= cap) break;
  }
  enforce_aux_cap(x, cap);
  return x;
}

std::vector<BOStep> bo_search(BOObjectiveConfig cfg, const sim::SimulatorSpec& spec, std::size_t budget,
                              std::uint64_t seed) {
  if (budget == 0) throw DomainError("search budget must be at least 1");
  const auto upper = search_upper_bounds();
  const std::size_t dim = upper.size();
  Rng rng(seed);
  std::vector<BOStep> trajectory;

  auto objective = [&](std::span<const double> t) {
    const auto x = composition_from_unit(t, upper, cfg.constraint_cap);
    const auto [y200, y500] = sim::fcc_extract(sim::simulate(spec, x), spec.fcc_index);
    BOStep step;
    step.composition = x;
    step.y200 = y200;
    step.y500 = y500;
    step.objective = bo_objective(y200, y500, x, cfg);
    step.best_so_far = trajectory.empty() ? step.objective : std::min(trajectory.back().best_so_far, step.objective);
    trajectory.push_back(step);
    cfg.visited.emplace_back(y200, y500);
    return step.objective;
  };
  auto sampler = [&](Rng& r) {
    return composition_to_unit(sample_feasible_composition(upper, cfg.constraint_cap, r), upper);
  };
  gp_ei_minimize(objective, sampler, dim, budget, rng);
  return trajectory;
}

}  // namespace forge::datagen
