#pragma once

#include "tensor_lift/tensor.hpp"

#include <span>

namespace tensor_lift {

enum class OperatorKind { dense, khatri_rao, kronecker, kronecker_times_matrix, tt_chain };

const char* to_string(OperatorKind kind);

/// Kronecker product a (x) b with row-major index pairing (b's index fastest).
Matrix kronecker_product(const Matrix& a, const Matrix& b);

/// A tall design matrix given implicitly by its factors.
///
/// Rows of every structured kind are enumerated in row-major order over the
/// factor row indices (last factor fastest); Kronecker columns likewise. With
/// that order the Khatri-Rao product of the factors other than n is exactly
/// the design whose rows line up with the columns of unfold(X, n).
///
/// - dense:                  the matrix itself
/// - khatri_rao(F_1..F_k):   row (i_1..i_k) = F_1(i_1,:) * ... * F_k(i_k,:)
/// - kronecker(F_1..F_k):    F_1 (x) ... (x) F_k
/// - kronecker_times_matrix: (F_1 (x) ... (x) F_k) M
/// - tt_chain(left, right):  L (x) R^T, with L the left interface of the
///                           left cores and R the right interface of the
///                           right cores
class StructuredOperator {
 public:
  static StructuredOperator dense(Matrix a);
  static StructuredOperator khatri_rao(std::vector<Matrix> factors);
  static StructuredOperator kronecker(std::vector<Matrix> factors);
  static StructuredOperator kronecker_times_matrix(std::vector<Matrix> factors, Matrix right);
  /// `left_cores` are TT cores 0..n-1 and `right_cores` cores n+1..N-1 of a
  /// train; either list may be empty. Columns index (r_{n-1}, r_n).
  static StructuredOperator tt_chain(const std::vector<DenseTensor>& left_cores,
                                     const std::vector<DenseTensor>& right_cores);

  OperatorKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  /// Kronecker-type factors (for tt_chain: {L, R^T}); the dense matrix for
  /// the dense kind.
  const std::vector<Matrix>& factors() const { return factors_; }
  const Matrix& right_matrix() const { return right_; }
  /// True when the rows form a plain Kronecker product of `factors()`, so
  /// per-factor quantities multiply.
  bool is_kronecker_form() const {
    return kind_ == OperatorKind::kronecker || kind_ == OperatorKind::tt_chain;
  }

  void row_into(std::size_t i, Eigen::Ref<Vector> out) const;
  Vector row(std::size_t i) const;
  double row_dot(std::size_t i, const Vector& x) const;
  Matrix gather_rows(std::span<const std::size_t> rows) const;

  Vector multiply(const Vector& x) const;
  Vector transpose_multiply(const Vector& b) const;

  /// A^T A without materialising A.
  Matrix gram() const;

  /// Dense copy; throws DimensionError if rows*cols exceeds `max_entries`.
  Matrix materialize(std::size_t max_entries = std::size_t{1} << 26) const;

  /// Mixed-radix split of a row index over the factor row counts.
  void factor_indices(std::size_t i, std::span<std::size_t> out) const;

 private:
  StructuredOperator() = default;
  void check_row(std::size_t i) const;

  OperatorKind kind_ = OperatorKind::dense;
  std::vector<Matrix> factors_;
  Matrix right_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t kron_cols_ = 0;
};

}  // namespace tensor_lift
