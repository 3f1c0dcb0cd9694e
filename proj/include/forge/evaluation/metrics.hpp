#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/datagen/dataset.hpp"
#include "forge/inference/predict.hpp"
#include "forge/training/train.hpp"

namespace forge::evaluation {

/// Relative error averaged over the true-nonzero elements and absolute error (predicted
/// mass) averaged over the true-zero elements of one instance.
struct CompositionError {
  double relative = 0;
  std::optional<double> absolute;  // nullopt when the instance has no zero element
  std::size_t nonzero = 0;         // M_i1
  std::size_t zero = 0;            // M_i0
};

/// Throws DimensionError on a length mismatch and DomainError on negative true values.
CompositionError composition_errors(std::span<const double> x_true, std::span<const double> x_pred);

struct Spread {
  double mean = 0;
  double std = 0;
};

/// Population mean and standard deviation.
Spread spread(const std::vector<double>& values);

/// min / mean / max of a metric over one row's candidates.
struct Triple {
  double min = 0, mean = 0, max = 0;
};

struct RowResult {
  std::size_t row = 0;
  std::size_t candidates = 0;
  Triple relative;
  std::optional<Triple> absolute;
};

struct FoldResult {
  int fold = 0;
  std::vector<RowResult> rows;

  /// Row means of each statistic; absolute rows without zero elements are skipped.
  Triple relative() const;
  std::optional<Triple> absolute() const;
};

struct ErrorReport {
  std::string method;
  double mask_ratio = 0;
  std::vector<FoldResult> folds;

  /// Across-fold mean and std of the per-fold row means for the chosen statistic.
  Spread relative_min() const;
  Spread relative_mean() const;
  Spread relative_max() const;
  Spread absolute_min() const;
  Spread absolute_mean() const;
  Spread absolute_max() const;
};

struct EvalConfig {
  inference::InferenceConfig inference;  // n = 20 candidates per target by default
  datagen::MaskMode mask_mode = datagen::MaskMode::rows;
  std::uint64_t mask_seed = 0;
  std::size_t max_rows = 0;  // 0 = every row of the fold
};

/// Mask drawn for dataset row `row` under the given ratio; identical across models.
datagen::Mask evaluation_mask(const EvalConfig& cfg, std::size_t row, double ratio, std::size_t phases,
                              std::size_t temps);

/// Predicts candidates for every test row and scores them. Throws ConfigError listing the
/// differing columns when the checkpoint and dataset schemas disagree.
FoldResult evaluate_fold(const training::Checkpoint& ckpt, const datagen::Dataset& data, int test_fold,
                         double mask_ratio, const EvalConfig& cfg);

ErrorReport evaluate_model(const training::Checkpoint& ckpt, const datagen::Dataset& data, int test_fold,
                           double mask_ratio, const EvalConfig& cfg);

struct SweepPoint {
  double ratio = 0;
  double relative_min = 0;
  double relative_mean = 0;
};

std::vector<double> default_sweep_ratios();
/// Throws ContractError unless the checkpoint holds a hybrid model.
std::vector<SweepPoint> missing_ratio_sweep(const training::Checkpoint& ckpt, const datagen::Dataset& data,
                                            int test_fold, const std::vector<double>& ratios, const EvalConfig& cfg);

/// True when every step rises by no less than −slack.
bool non_decreasing(const std::vector<SweepPoint>& curve, double slack);

}  // namespace forge::evaluation
