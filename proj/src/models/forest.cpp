#include "forge/models/forest.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "forge/common/errors.hpp"
#include "forge/common/rng.hpp"

namespace forge::models {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

bool targets_constant(const RowMatrix& targets, std::span<const std::size_t> rows) {
  const auto first = targets.row(static_cast<Eigen::Index>(rows.front()));
  for (std::size_t r : rows) {
    if (targets.row(static_cast<Eigen::Index>(r)) != first) return false;
  }
  return true;
}

}  // namespace

void RegressionTree::fit(const RowMatrix& features, const RowMatrix& targets,
                         std::span<const std::size_t> rows_in, const ForestOptions& options,
                         std::uint64_t seed) {
  nodes_.clear();
  values_.clear();
  outputs_ = static_cast<std::size_t>(targets.cols());
  const std::size_t width = static_cast<std::size_t>(features.cols());
  const std::size_t tries = std::min(options.max_features, width);
  Rng rng(seed);

  std::vector<std::size_t> rows(rows_in.begin(), rows_in.end());
  std::vector<std::size_t> feature_pool(width);
  std::iota(feature_pool.begin(), feature_pool.end(), 0);

  struct Pending {
    std::uint32_t node;
    std::size_t begin, end;
  };
  nodes_.emplace_back();
  std::vector<Pending> stack{{0, 0, rows.size()}};

  std::vector<std::pair<double, std::size_t>> sorted;
  std::vector<double> left_sum(outputs_), left_sq(outputs_), total_sum(outputs_), total_sq(outputs_);

  auto make_leaf = [&](std::uint32_t id, std::span<const std::size_t> span) {
    Node& node = nodes_[id];
    node.feature = -1;
    node.value_offset = static_cast<std::uint32_t>(values_.size());
    for (std::size_t o = 0; o < outputs_; ++o) {
      double s = 0.0;
      for (std::size_t r : span) s += targets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(o));
      values_.push_back(span.empty() ? 0.0 : s / static_cast<double>(span.size()));
    }
  };

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    std::span<std::size_t> span(rows.data() + job.begin, job.end - job.begin);
    if (span.size() <= options.min_leaf_rows || targets_constant(targets, span)) {
      make_leaf(job.node, span);
      continue;
    }

    for (std::size_t o = 0; o < outputs_; ++o) {
      total_sum[o] = total_sq[o] = 0.0;
      for (std::size_t r : span) {
        const double v = targets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(o));
        total_sum[o] += v;
        total_sq[o] += v * v;
      }
    }
    const double n = static_cast<double>(span.size());
    double parent_sse = 0.0;
    for (std::size_t o = 0; o < outputs_; ++o) parent_sse += total_sq[o] - total_sum[o] * total_sum[o] / n;

    // Partial Fisher-Yates draws the candidate features for this node.
    for (std::size_t i = 0; i < tries; ++i) {
      const std::size_t j = i + rng.below(width - i);
      std::swap(feature_pool[i], feature_pool[j]);
    }

    Split best;
    for (std::size_t f = 0; f < tries; ++f) {
      const std::size_t feature = feature_pool[f];
      sorted.clear();
      for (std::size_t r : span) {
        sorted.emplace_back(features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(feature)), r);
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_sq.begin(), left_sq.end(), 0.0);
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i].second;
        for (std::size_t o = 0; o < outputs_; ++o) {
          const double v = targets(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(o));
          left_sum[o] += v;
          left_sq[o] += v * v;
        }
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        double sse = 0.0;
        for (std::size_t o = 0; o < outputs_; ++o) {
          const double rs = total_sum[o] - left_sum[o];
          const double rq = total_sq[o] - left_sq[o];
          sse += (left_sq[o] - left_sum[o] * left_sum[o] / nl) + (rq - rs * rs / nr);
        }
        const double gain = parent_sse - sse;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<int>(feature);
          best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }

    if (best.feature < 0 || best.gain <= 1e-12 * std::max(1.0, parent_sse)) {
      make_leaf(job.node, span);
      continue;
    }

    auto middle = std::partition(span.begin(), span.end(), [&](std::size_t r) {
      return features(static_cast<Eigen::Index>(r), best.feature) <= best.threshold;
    });
    const std::size_t split_at = job.begin + static_cast<std::size_t>(middle - span.begin());
    const auto left_id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    const auto right_id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Node& node = nodes_[job.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = right_id;
    stack.push_back({right_id, split_at, job.end});
    stack.push_back({left_id, job.begin, split_at});
  }
}

void RegressionTree::predict(std::span<const double> features, std::span<double> out) const {
  std::uint32_t id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& node = nodes_[id];
    id = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  const auto offset = nodes_[id].value_offset;
  std::copy_n(values_.begin() + offset, outputs_, out.begin());
}

std::vector<double> RegressionTree::to_flat() const {
  std::vector<double> flat{static_cast<double>(outputs_), static_cast<double>(nodes_.size()),
                           static_cast<double>(values_.size())};
  for (const Node& n : nodes_) {
    flat.insert(flat.end(), {static_cast<double>(n.feature), n.threshold, static_cast<double>(n.left),
                             static_cast<double>(n.right), static_cast<double>(n.value_offset)});
  }
  flat.insert(flat.end(), values_.begin(), values_.end());
  return flat;
}

RegressionTree RegressionTree::from_flat(std::span<const double> flat) {
  if (flat.size() < 3) throw IntegrityError("tree blob too short");
  RegressionTree tree;
  tree.outputs_ = static_cast<std::size_t>(flat[0]);
  const auto node_count = static_cast<std::size_t>(flat[1]);
  const auto value_count = static_cast<std::size_t>(flat[2]);
  if (flat.size() != 3 + 5 * node_count + value_count) throw IntegrityError("tree blob length mismatch");
  std::size_t i = 3;
  for (std::size_t k = 0; k < node_count; ++k, i += 5) {
    Node n;
    n.feature = static_cast<int>(flat[i]);
    n.threshold = flat[i + 1];
    n.left = static_cast<std::uint32_t>(flat[i + 2]);
    n.right = static_cast<std::uint32_t>(flat[i + 3]);
    n.value_offset = static_cast<std::uint32_t>(flat[i + 4]);
    tree.nodes_.push_back(n);
  }
  tree.values_.assign(flat.begin() + static_cast<std::ptrdiff_t>(i), flat.end());
  return tree;
}

void ForestModel::fit(const RowMatrix& features, const RowMatrix& targets, const ForestOptions& options,
                      std::uint64_t seed) {
  if (features.rows() != targets.rows() || features.rows() == 0) {
    throw DimensionError("forest_fit: " + std::to_string(features.rows()) + " feature rows vs " +
                         std::to_string(targets.rows()) + " target rows");
  }
  feature_width_ = static_cast<std::size_t>(features.cols());
  outputs_ = static_cast<std::size_t>(targets.cols());
  trees_.assign(options.trees, RegressionTree{});
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(features.rows());
  std::vector<std::size_t> rows(n);
  for (auto& tree : trees_) {
    if (options.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    tree.fit(features, targets, rows, options, rng.fork());
  }
}

std::vector<double> ForestModel::predict(std::span<const double> features) const {
  if (features.size() != feature_width_) {
    throw DimensionError("forest_predict: " + std::to_string(features.size()) + " features, model expects " +
                         std::to_string(feature_width_));
  }
  std::vector<double> total(outputs_, 0.0), one(outputs_);
  for (const auto& tree : trees_) {
    tree.predict(features, one);
    for (std::size_t o = 0; o < outputs_; ++o) total[o] += one[o];
  }
  for (double& v : total) v /= static_cast<double>(trees_.size());
  return total;
}

void ForestModel::restore(std::size_t feature_width, std::size_t outputs, std::vector<RegressionTree> trees) {
  feature_width_ = feature_width;
  outputs_ = outputs;
  trees_ = std::move(trees);
}

}  // namespace forge::models
