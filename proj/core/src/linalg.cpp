#include "tensor_lift/linalg.hpp"

namespace tensor_lift {

PsdPseudoInverse psd_pseudo_inverse(const Matrix& gram, double tolerance) {
  if (gram.rows() != gram.cols()) throw DimensionError("psd_pseudo_inverse: matrix is not square");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw SolverError("eigendecomposition of Gram matrix failed");
  const Vector& values = eig.eigenvalues();
  const double top = values.size() ? std::max(values.maxCoeff(), 0.0) : 0.0;
  const double cut = tolerance * top;
  PsdPseudoInverse out;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (top > 0.0 && values[k] > cut) kept.push_back(k);
  out.rank = kept.size();
  out.rank_deficient = out.rank < static_cast<std::size_t>(gram.rows());
  out.range_basis.resize(gram.rows(), static_cast<Eigen::Index>(kept.size()));
  Vector inv_values(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    out.range_basis.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(kept[j]);
    inv_values[static_cast<Eigen::Index>(j)] = 1.0 / values[kept[j]];
  }
  out.inverse = out.range_basis * inv_values.asDiagonal() * out.range_basis.transpose();
  return out;
}

Vector least_squares_min_norm(const Matrix& m, const Vector& b, double tolerance) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(tolerance);
  cod.compute(m);
  return cod.solve(b);
}

}  // namespace tensor_lift
