#include "tensor_lift/structured_operator.hpp"

#include "tensor_lift/models.hpp"

namespace tensor_lift {

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::khatri_rao: return "khatri-rao";
    case OperatorKind::kronecker: return "kronecker";
    case OperatorKind::kronecker_times_matrix: return "kronecker-times-matrix";
    case OperatorKind::tt_chain: return "tt-chain";
  }
  return "?";
}

Matrix kronecker_product(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

namespace {

void require_factors(const std::vector<Matrix>& factors, const char* what) {
  if (factors.empty()) throw DimensionError(std::string(what) + ": at least one factor required");
  if (factors.size() > 64) throw DimensionError(std::string(what) + ": more than 64 factors");
  for (const auto& f : factors) {
    if (f.rows() == 0 || f.cols() == 0) throw DimensionError(std::string(what) + ": empty factor");
  }
}

}  // namespace

StructuredOperator StructuredOperator::dense(Matrix a) {
  if (a.rows() == 0 || a.cols() == 0) throw DimensionError("dense operator: empty matrix");
  StructuredOperator op;
  op.kind_ = OperatorKind::dense;
  op.rows_ = static_cast<std::size_t>(a.rows());
  op.cols_ = static_cast<std::size_t>(a.cols());
  op.factors_.push_back(std::move(a));
  return op;
}

StructuredOperator StructuredOperator::khatri_rao(std::vector<Matrix> factors) {
  require_factors(factors, "khatri_rao");
  StructuredOperator op;
  op.kind_ = OperatorKind::khatri_rao;
  op.rows_ = 1;
  op.cols_ = static_cast<std::size_t>(factors.front().cols());
  for (const auto& f : factors) {
    if (static_cast<std::size_t>(f.cols()) != op.cols_)
      throw DimensionError("khatri_rao: factors must share a column count");
    op.rows_ *= static_cast<std::size_t>(f.rows());
  }
  op.factors_ = std::move(factors);
  return op;
}

StructuredOperator StructuredOperator::kronecker(std::vector<Matrix> factors) {
  require_factors(factors, "kronecker");
  StructuredOperator op;
  op.kind_ = OperatorKind::kronecker;
  op.rows_ = 1;
  op.cols_ = 1;
  for (const auto& f : factors) {
    op.rows_ *= static_cast<std::size_t>(f.rows());
    op.cols_ *= static_cast<std::size_t>(f.cols());
  }
  op.kron_cols_ = op.cols_;
  op.factors_ = std::move(factors);
  return op;
}

StructuredOperator StructuredOperator::kronecker_times_matrix(std::vector<Matrix> factors, Matrix right) {
  StructuredOperator op = kronecker(std::move(factors));
  if (static_cast<std::size_t>(right.rows()) != op.kron_cols_) {
    throw DimensionError("kronecker_times_matrix: right matrix has " + std::to_string(right.rows()) +
                         " rows, Kronecker product has " + std::to_string(op.kron_cols_) + " columns");
  }
  if (right.cols() == 0) throw DimensionError("kronecker_times_matrix: empty right matrix");
  op.kind_ = OperatorKind::kronecker_times_matrix;
  op.cols_ = static_cast<std::size_t>(right.cols());
  op.right_ = std::move(right);
  return op;
}

StructuredOperator StructuredOperator::tt_chain(const std::vector<DenseTensor>& left_cores,
                                                const std::vector<DenseTensor>& right_cores) {
  for (const auto* list : {&left_cores, &right_cores})
    for (const auto& c : *list)
      if (c.order() != 3) throw DimensionError("tt_chain: cores must be third-order");
  if (!left_cores.empty() && left_cores.front().dim(0) != 1)
    throw DimensionError("tt_chain: first left core must have boundary rank 1");
  if (!right_cores.empty() && right_cores.back().dim(2) != 1)
    throw DimensionError("tt_chain: last right core must have boundary rank 1");
  // tt_left_chain(cores, k) contracts cores[0..k-1]; tt_right_chain(cores, m)
  // contracts cores[m+1..]. Prefix a placeholder so m = 0 covers them all.
  Matrix left = tt_left_chain(left_cores, left_cores.size());
  std::vector<DenseTensor> padded;
  padded.reserve(right_cores.size() + 1);
  padded.emplace_back(Shape{1, 1, 1});
  padded.insert(padded.end(), right_cores.begin(), right_cores.end());
  Matrix right = tt_right_chain(padded, 0);
  StructuredOperator op = kronecker({std::move(left), right.transpose()});
  op.kind_ = OperatorKind::tt_chain;
  return op;
}

void StructuredOperator::check_row(std::size_t i) const {
  if (i >= rows_) throw DimensionError("operator row " + std::to_string(i) + " out of range");
}

void StructuredOperator::factor_indices(std::size_t i, std::span<std::size_t> out) const {
  for (std::size_t k = factors_.size(); k-- > 0;) {
    const auto n = static_cast<std::size_t>(factors_[k].rows());
    out[k] = i % n;
    i /= n;
  }
}

void StructuredOperator::row_into(std::size_t i, Eigen::Ref<Vector> out) const {
  check_row(i);
  if (kind_ == OperatorKind::dense) {
    out = factors_.front().row(static_cast<Eigen::Index>(i)).transpose();
    return;
  }
  std::size_t idx[64];
  factor_indices(i, std::span<std::size_t>(idx, factors_.size()));
  if (kind_ == OperatorKind::khatri_rao) {
    out = factors_.front().row(static_cast<Eigen::Index>(idx[0])).transpose();
    for (std::size_t k = 1; k < factors_.size(); ++k)
      out.array() *= factors_[k].row(static_cast<Eigen::Index>(idx[k])).transpose().array();
    return;
  }
  // Kronecker of factor rows, built left to right.
  Vector kron = factors_.front().row(static_cast<Eigen::Index>(idx[0])).transpose();
  for (std::size_t k = 1; k < factors_.size(); ++k) {
    const auto& f = factors_[k];
    const auto fc = f.cols();
    Vector next(kron.size() * fc);
    for (Eigen::Index a = 0; a < kron.size(); ++a)
      next.segment(a * fc, fc) = kron[a] * f.row(static_cast<Eigen::Index>(idx[k])).transpose();
    kron = std::move(next);
  }
  if (kind_ == OperatorKind::kronecker_times_matrix) {
    out = right_.transpose() * kron;
  } else {
    out = kron;
  }
}

Vector StructuredOperator::row(std::size_t i) const {
  Vector out(static_cast<Eigen::Index>(cols_));
  row_into(i, out);
  return out;
}

double StructuredOperator::row_dot(std::size_t i, const Vector& x) const {
  if (kind_ == OperatorKind::dense) {
    check_row(i);
    return factors_.front().row(static_cast<Eigen::Index>(i)).dot(x);
  }
  return row(i).dot(x);
}

Matrix StructuredOperator::gather_rows(std::span<const std::size_t> rows) const {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols_));
  Vector buf(static_cast<Eigen::Index>(cols_));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    row_into(rows[k], buf);
    m.row(static_cast<Eigen::Index>(k)) = buf.transpose();
  }
  return m;
}

Vector StructuredOperator::multiply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != cols_) throw DimensionError("multiply: length mismatch");
  if (kind_ == OperatorKind::dense) return factors_.front() * x;
  Vector y(static_cast<Eigen::Index>(rows_));
  Vector buf(static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    row_into(i, buf);
    y[static_cast<Eigen::Index>(i)] = buf.dot(x);
  }
  return y;
}

Vector StructuredOperator::transpose_multiply(const Vector& b) const {
  if (static_cast<std::size_t>(b.size()) != rows_) throw DimensionError("transpose_multiply: length mismatch");
  if (kind_ == OperatorKind::dense) return factors_.front().transpose() * b;
  Vector y = Vector::Zero(static_cast<Eigen::Index>(cols_));
  Vector buf(static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    const double bi = b[static_cast<Eigen::Index>(i)];
    if (bi == 0.0) continue;
    row_into(i, buf);
    y += bi * buf;
  }
  return y;
}

Matrix StructuredOperator::gram() const {
  switch (kind_) {
    case OperatorKind::dense:
      return factors_.front().transpose() * factors_.front();
    case OperatorKind::khatri_rao: {
      Matrix g = factors_.front().transpose() * factors_.front();
      for (std::size_t k = 1; k < factors_.size(); ++k)
        g.array() *= (factors_[k].transpose() * factors_[k]).array();
      return g;
    }
    case OperatorKind::kronecker:
    case OperatorKind::tt_chain:
    case OperatorKind::kronecker_times_matrix: {
      Matrix g = factors_.front().transpose() * factors_.front();
      for (std::size_t k = 1; k < factors_.size(); ++k)
        g = kronecker_product(g, factors_[k].transpose() * factors_[k]);
      if (kind_ == OperatorKind::kronecker_times_matrix) return right_.transpose() * g * right_;
      return g;
    }
  }
  return {};
}

Matrix StructuredOperator::materialize(std::size_t max_entries) const {
  if (cols_ != 0 && rows_ > max_entries / cols_) {
    throw DimensionError("materialize: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         " exceeds the size guard");
  }
  if (kind_ == OperatorKind::dense) return factors_.front();
  Matrix m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  Vector buf(static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    row_into(i, buf);
    m.row(static_cast<Eigen::Index>(i)) = buf.transpose();
  }
  return m;
}

}  // namespace tensor_lift
