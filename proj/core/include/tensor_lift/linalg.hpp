#pragma once

#include "tensor_lift/types.hpp"

namespace tensor_lift {

/// Eigenvalues of a Gram matrix below this fraction of the largest one are
/// treated as zero.
inline constexpr double kGramRankTolerance = 1e-13;

/// Moore-Penrose inverse of a symmetric PSD matrix (typically a Gram).
struct PsdPseudoInverse {
  Matrix inverse;
  std::size_t rank = 0;
  bool rank_deficient = false;
  /// Eigenvectors spanning the range, one per retained eigenvalue.
  Matrix range_basis;
};

PsdPseudoInverse psd_pseudo_inverse(const Matrix& gram, double tolerance = kGramRankTolerance);

/// Minimum-norm solution of min ||m x - b||, via complete orthogonal
/// decomposition with the given relative rank threshold.
Vector least_squares_min_norm(const Matrix& m, const Vector& b, double tolerance = 1e-12);

}  // namespace tensor_lift
