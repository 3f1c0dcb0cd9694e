#include "forge/evaluation/pca.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "forge/common/errors.hpp"

namespace forge::evaluation {

Pca pca_fit(const RowMatrix& rows, std::size_t dims) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto f = static_cast<std::size_t>(rows.cols());
  if (dims == 0 || dims > f) {
    throw DomainError("pca: cannot keep " + std::to_string(dims) + " components of " + std::to_string(f) + " features");
  }
  if (n < dims) throw DomainError("pca: " + std::to_string(n) + " rows is fewer than " + std::to_string(dims) + " components");

  const Vector mean = rows.colwise().mean().transpose();
  const RowMatrix centered = rows.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(std::max<std::size_t>(n, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigen decomposition failed");

  // Eigenvalues come out ascending.
  const Vector& values = eig.eigenvalues();
  const double total = std::max(values.sum(), 0.0);
  Pca p;
  p.mean.assign(mean.data(), mean.data() + f);
  for (std::size_t k = 0; k < dims; ++k) {
    const Eigen::Index idx = static_cast<Eigen::Index>(f - 1 - k);
    Vector v = eig.eigenvectors().col(idx);
    // Sign convention: largest-magnitude entry positive, so reruns give identical output.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.emplace_back(v.data(), v.data() + f);
    p.explained.push_back(total > 0 ? std::max(values(idx), 0.0) / total : 0.0);
  }
  return p;
}

RowMatrix Pca::project(const RowMatrix& rows) const {
  const auto f = static_cast<Eigen::Index>(mean.size());
  if (rows.cols() != f) {
    throw DimensionError("pca: rows have " + std::to_string(rows.cols()) + " features, fitted on " + std::to_string(f));
  }
  RowMatrix out(rows.rows(), static_cast<Eigen::Index>(components.size()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (std::size_t k = 0; k < components.size(); ++k) {
      double s = 0;
      for (Eigen::Index j = 0; j < f; ++j) s += (rows(r, j) - mean[static_cast<std::size_t>(j)]) * components[k][static_cast<std::size_t>(j)];
      out(r, static_cast<Eigen::Index>(k)) = s;
    }
  }
  return out;
}

RowMatrix Pca::reconstruct(const RowMatrix& coords) const {
  if (static_cast<std::size_t>(coords.cols()) != components.size()) {
    throw DimensionError("pca: expected " + std::to_string(components.size()) + " coordinates per row");
  }
  RowMatrix out(coords.rows(), static_cast<Eigen::Index>(mean.size()));
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    for (std::size_t j = 0; j < mean.size(); ++j) {
      double s = mean[j];
      for (std::size_t k = 0; k < components.size(); ++k) s += coords(r, static_cast<Eigen::Index>(k)) * components[k][j];
      out(r, static_cast<Eigen::Index>(j)) = s;
    }
  }
  return out;
}

}  // namespace forge::evaluation
