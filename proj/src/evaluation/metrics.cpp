#include "forge/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common/errors.hpp"

namespace forge::evaluation {

CompositionError composition_errors(std::span<const double> x_true, std::span<const double> x_pred) {
  if (x_true.size() != x_pred.size()) {
    throw DimensionError("composition lengths differ: " + std::to_string(x_true.size()) + " vs " +
                         std::to_string(x_pred.size()));
  }
  CompositionError e;
  double rel = 0, abs = 0;
  for (std::size_t i = 0; i < x_true.size(); ++i) {
    if (x_true[i] < 0.0) throw DomainError("true composition has a negative entry at index " + std::to_string(i));
    if (x_true[i] > 0.0) {
      rel += std::abs(x_pred[i] - x_true[i]) / x_true[i];
      ++e.nonzero;
    } else {
      abs += x_pred[i];
      ++e.zero;
    }
  }
  e.relative = e.nonzero > 0 ? rel / static_cast<double>(e.nonzero) : 0.0;
  if (e.zero > 0) e.absolute = abs / static_cast<double>(e.zero);
  return e;
}

Spread spread(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

Triple FoldResult::relative() const {
  Triple t;
  if (rows.empty()) return t;
  for (const auto& r : rows) {
    t.min += r.relative.min;
    t.mean += r.relative.mean;
    t.max += r.relative.max;
  }
  const double n = static_cast<double>(rows.size());
  return {t.min / n, t.mean / n, t.max / n};
}

std::optional<Triple> FoldResult::absolute() const {
  Triple t;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!r.absolute) continue;
    t.min += r.absolute->min;
    t.mean += r.absolute->mean;
    t.max += r.absolute->max;
    ++n;
  }
  if (n == 0) return std::nullopt;
  const double d = static_cast<double>(n);
  return Triple{t.min / d, t.mean / d, t.max / d};
}

namespace {

template <typename Pick>
Spread across_folds(const std::vector<FoldResult>& folds, Pick pick) {
  std::vector<double> v;
  for (const auto& f : folds) {
    if (auto x = pick(f)) v.push_back(*x);
  }
  return spread(v);
}

}  // namespace

Spread ErrorReport::relative_min() const {
  return across_folds(folds, [](const FoldResult& f) { return std::optional<double>(f.relative().min); });
}
Spread ErrorReport::relative_mean() const {
  return across_folds(folds, [](const FoldResult& f) { return std::optional<double>(f.relative().mean); });
}
Spread ErrorReport::relative_max() const {
  return across_folds(folds, [](const FoldResult& f) { return std::optional<double>(f.relative().max); });
}
Spread ErrorReport::absolute_min() const {
  return across_folds(folds, [](const FoldResult& f) {
    auto a = f.absolute();
    return a ? std::optional<double>(a->min) : std::nullopt;
  });
}
Spread ErrorReport::absolute_mean() const {
  return across_folds(folds, [](const FoldResult& f) {
    auto a = f.absolute();
    return a ? std::optional<double>(a->mean) : std::nullopt;
  });
}
Spread ErrorReport::absolute_max() const {
  return across_folds(folds, [](const FoldResult& f) {
    auto a = f.absolute();
    return a ? std::optional<double>(a->max) : std::nullopt;
  });
}

datagen::Mask evaluation_mask(const EvalConfig& cfg, std::size_t row, double ratio, std::size_t phases,
                              std::size_t temps) {
  Rng rng(cfg.mask_seed ^ (0x9e3779b97f4a7c15ULL * (row + 1)));
  return cfg.mask_mode == datagen::MaskMode::rows ? datagen::sample_row_mask(phases, ratio, rng)
                                                  : datagen::sample_cell_mask(phases, temps, ratio, rng);
}

FoldResult evaluate_fold(const training::Checkpoint& ckpt, const datagen::Dataset& data, int test_fold,
                         double mask_ratio, const EvalConfig& cfg) {
  const auto diff = ckpt.schema.diff(training::Schema::of(data));
  if (!diff.empty()) throw ConfigError("checkpoint and dataset schemas differ: " + diff);
  FoldResult fold;
  fold.fold = test_fold;
  auto rows = data.rows_in_folds({test_fold});
  if (cfg.max_rows > 0 && rows.size() > cfg.max_rows) rows.resize(cfg.max_rows);
  for (std::size_t row : rows) {
    const auto mask = evaluation_mask(cfg, row, mask_ratio, data.phases(), data.temps());
    const auto query = inference::make_query(data.diagrams[row], mask, data.phases(), data.temps());
    auto icfg = cfg.inference;
    icfg.seed = cfg.inference.seed ^ (0xbf58476d1ce4e5b9ULL * (row + 1));
    const auto candidates = inference::predict_designs(ckpt, query, icfg);

    RowResult rr;
    rr.row = row;
    rr.candidates = candidates.size();
    rr.relative = {1e300, 0, -1e300};
    Triple abs{1e300, 0, -1e300};
    bool has_abs = false;
    for (const auto& c : candidates) {
      const auto e = composition_errors(data.compositions[row], c.composition);
      rr.relative.min = std::min(rr.relative.min, e.relative);
      rr.relative.max = std::max(rr.relative.max, e.relative);
      rr.relative.mean += e.relative;
      if (e.absolute) {
        has_abs = true;
        abs.min = std::min(abs.min, *e.absolute);
        abs.max = std::max(abs.max, *e.absolute);
        abs.mean += *e.absolute;
      }
    }
    rr.relative.mean /= static_cast<double>(candidates.size());
    if (has_abs) {
      abs.mean /= static_cast<double>(candidates.size());
      rr.absolute = abs;
    }
    fold.rows.push_back(rr);
  }
  return fold;
}

ErrorReport evaluate_model(const training::Checkpoint& ckpt, const datagen::Dataset& data, int test_fold,
                           double mask_ratio, const EvalConfig& cfg) {
  ErrorReport report;
  report.method = models::to_string(ckpt.config.kind);
  report.mask_ratio = mask_ratio;
  report.folds.push_back(evaluate_fold(ckpt, data, test_fold, mask_ratio, cfg));
  return report;
}

std::vector<double> default_sweep_ratios() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

std::vector<SweepPoint> missing_ratio_sweep(const training::Checkpoint& ckpt, const datagen::Dataset& data,
                                            int test_fold, const std::vector<double>& ratios, const EvalConfig& cfg) {
  if (!models::is_hybrid(ckpt.config.kind)) {
    throw ContractError("missing-ratio sweep needs a hybrid checkpoint, got " + models::to_string(ckpt.config.kind));
  }
  std::vector<SweepPoint> curve;
  for (double r : ratios) {
    const auto rel = evaluate_fold(ckpt, data, test_fold, r, cfg).relative();
    curve.push_back({r, rel.min, rel.mean});
  }
  return curve;
}

bool non_decreasing(const std::vector<SweepPoint>& curve, double slack) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].relative_min < curve[i - 1].relative_min - slack) return false;
  }
  return true;
}

}  // namespace forge::evaluation
