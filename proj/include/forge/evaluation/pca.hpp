#pragma once

#include <vector>

#include "forge/common/matrix.hpp"

namespace forge::evaluation {

struct Pca {
  std::vector<double> mean;                     // feature means of the fitted data
  std::vector<std::vector<double>> components;  // dims unit vectors, by decreasing variance
  std::vector<double> explained;                // fraction of total variance per component

  /// Coordinates of each row on the components.
  RowMatrix project(const RowMatrix& rows) const;
  /// Maps component coordinates back to feature space.
  RowMatrix reconstruct(const RowMatrix& coords) const;
};

/// Centers the rows and keeps the top `dims` eigenvectors of their covariance. Throws
/// DomainError when dims exceeds the feature count or the number of rows.
Pca pca_fit(const RowMatrix& rows, std::size_t dims = 2);

}  // namespace forge::evaluation
