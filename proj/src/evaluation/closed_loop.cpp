#include "forge/evaluation/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/common/errors.hpp"

namespace forge::evaluation {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_defined(const std::vector<double>& v) {
  double sum = 0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void keep_min(std::optional<double>& slot, const std::optional<double>& value) {
  if (value && (!slot || *value < *slot)) slot = value;
}
}  // namespace

PhaseScale PhaseScale::of(const datagen::Dataset& data) {
  const std::size_t P = data.phases(), T = data.temps();
  PhaseScale s;
  s.lo.assign(P, std::numeric_limits<double>::infinity());
  s.hi.assign(P, -std::numeric_limits<double>::infinity());
  for (const auto& d : data.diagrams) {
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t t = 0; t < T; ++t) {
        s.lo[p] = std::min(s.lo[p], d[p * T + t]);
        s.hi[p] = std::max(s.hi[p], d[p * T + t]);
      }
    }
  }
  if (data.diagrams.empty()) return unit(P);
  return s;
}

PhaseScale PhaseScale::unit(std::size_t phases) { return {std::vector<double>(phases, 0.0), std::vector<double>(phases, 1.0)}; }

double PhaseScale::apply(std::size_t phase, double value) const {
  const double range = hi[phase] - lo[phase];
  return range > 0 ? (value - lo[phase]) / range : 0.0;
}

double PhaseErrors::mean_relative() const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : relative) {
    if (!r) continue;
    sum += *r;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

PhaseErrors phase_errors(std::span<const double> predicted, std::span<const double> truth,
                         std::span<const std::uint8_t> hidden, const PhaseScale& scale, std::size_t temps) {
  const std::size_t P = scale.lo.size();
  if (predicted.size() != P * temps || truth.size() != P * temps) {
    throw DimensionError("phase_errors: diagrams must hold " + std::to_string(P * temps) + " cells, got " +
                         std::to_string(predicted.size()) + " and " + std::to_string(truth.size()));
  }
  if (!hidden.empty() && hidden.size() != P * temps) throw DimensionError("phase_errors: mask has the wrong width");
  PhaseErrors e;
  e.relative.resize(P);
  e.absolute.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    double diff = 0, mass = 0, pred_mass = 0;
    std::size_t observed = 0;
    for (std::size_t t = 0; t < temps; ++t) {
      const std::size_t i = p * temps + t;
      if (!hidden.empty() && hidden[i]) continue;
      const double y = scale.apply(p, truth[i]), yhat = scale.apply(p, predicted[i]);
      diff += std::abs(yhat - y);
      mass += std::abs(y);
      pred_mass += std::abs(yhat);
      ++observed;
    }
    if (observed == 0) continue;
    if (mass > 0) {
      e.relative[p] = diff / mass;
    } else {
      e.absolute[p] = pred_mass / static_cast<double>(observed);
    }
  }
  return e;
}

ClosedLoopTarget closed_loop_verify(const sim::SimulatorSpec& spec, const std::vector<sim::Composition>& candidates,
                                    std::span<const double> truth, std::span<const std::uint8_t> hidden,
                                    const PhaseScale& scale) {
  if (scale.lo.size() != spec.phases()) throw DimensionError("phase scale and simulator disagree on the phase count");
  ClosedLoopTarget out;
  out.relative.resize(spec.phases());
  out.absolute.resize(spec.phases());
  for (const auto& x : candidates) {
    const auto d = sim::simulate(spec, x);
    ++out.simulator_calls;
    const auto e = phase_errors(d.values, truth, hidden, scale, d.temps());
    for (std::size_t p = 0; p < spec.phases(); ++p) {
      keep_min(out.relative[p], e.relative[p]);
      keep_min(out.absolute[p], e.absolute[p]);
    }
  }
  return out;
}

ClosedLoopReport make_closed_loop_report(const std::vector<std::string>& labels) {
  ClosedLoopReport r;
  r.labels = labels;
  r.relative.assign(labels.size(), kNaN);
  r.absolute.assign(labels.size(), kNaN);
  r.relative_count.assign(labels.size(), 0);
  r.absolute_count.assign(labels.size(), 0);
  return r;
}

void ClosedLoopReport::add(const ClosedLoopTarget& target) {
  if (target.relative.size() != labels.size()) throw DimensionError("closed-loop target has the wrong phase count");
  auto accumulate = [](double& mean, std::size_t& count, const std::optional<double>& v) {
    if (!v) return;
    ++count;
    mean = count == 1 ? *v : mean + (*v - mean) / static_cast<double>(count);
  };
  for (std::size_t p = 0; p < labels.size(); ++p) {
    accumulate(relative[p], relative_count[p], target.relative[p]);
    accumulate(absolute[p], absolute_count[p], target.absolute[p]);
  }
  ++targets;
}

ClosedLoopReport closed_loop_fold(const sim::SimulatorSpec& spec, const training::Checkpoint& ckpt,
                                  const datagen::Dataset& data, int test_fold, double mask_ratio, const EvalConfig& cfg) {
  if (data.labels != spec.labels) throw ConfigError("dataset phases do not match the simulator spec");
  const auto scale = PhaseScale::of(data);
  auto report = make_closed_loop_report(data.labels);
  auto rows = data.rows_in_folds({test_fold});
  if (cfg.max_rows > 0 && rows.size() > cfg.max_rows) rows.resize(cfg.max_rows);
  for (std::size_t row : rows) {
    const auto mask = evaluation_mask(cfg, row, mask_ratio, data.phases(), data.temps());
    const auto query = inference::make_query(data.diagrams[row], mask, data.phases(), data.temps());
    auto icfg = cfg.inference;
    icfg.seed = cfg.inference.seed ^ (0xbf58476d1ce4e5b9ULL * (row + 1));
    std::vector<sim::Composition> xs;
    for (const auto& c : inference::predict_designs(ckpt, query, icfg)) xs.push_back(c.composition);
    report.add(closed_loop_verify(spec, xs, data.diagrams[row], query.hidden, scale));
  }
  return report;
}

double ClosedLoopReport::average_relative() const { return mean_defined(relative); }
double ClosedLoopReport::average_absolute() const { return mean_defined(absolute); }

}  // namespace forge::evaluation
