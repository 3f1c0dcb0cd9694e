#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/common/matrix.hpp"

namespace forge::models {

struct ForestOptions {
  std::size_t trees = 30;
  std::size_t max_features = 100;
  std::size_t min_leaf_rows = 5;  // nodes with this many rows or fewer become leaves
  bool bootstrap = true;
};

/// Multi-output regression tree grown by variance reduction summed over outputs.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t value_offset = 0;  // leaf mean at values()[offset, offset + outputs)
  };

  void fit(const RowMatrix& features, const RowMatrix& targets, std::span<const std::size_t> rows,
           const ForestOptions& options, std::uint64_t seed);
  /// Writes the leaf mean for one feature row into `out`.
  void predict(std::span<const double> features, std::span<double> out) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t outputs() const { return outputs_; }

  std::vector<double> to_flat() const;
  static RegressionTree from_flat(std::span<const double> flat);

 private:
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::size_t outputs_ = 0;
};

/// Bagged regression trees; prediction is the mean over trees.
class ForestModel {
 public:
  void fit(const RowMatrix& features, const RowMatrix& targets, const ForestOptions& options,
           std::uint64_t seed);
  /// Throws DimensionError if the feature width differs from training.
  std::vector<double> predict(std::span<const double> features) const;

  std::size_t feature_width() const { return feature_width_; }
  std::size_t outputs() const { return outputs_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  void restore(std::size_t feature_width, std::size_t outputs, std::vector<RegressionTree> trees);

 private:
  std::vector<RegressionTree> trees_;
  std::size_t feature_width_ = 0;
  std::size_t outputs_ = 0;
};

}  // namespace forge::models
