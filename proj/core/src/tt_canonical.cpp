#include "tensor_lift/completion.hpp"

namespace tensor_lift {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix as_rows(const DenseTensor& t, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RowMatrix>(t.data().data(), rows, cols);
}

DenseTensor from_rows(const RowMatrix& m, Shape shape) {
  return DenseTensor(std::move(shape), std::vector<double>(m.data(), m.data() + m.size()));
}

// Thin QR of an m x r matrix keeping r columns; zero-padded when m < r.
std::pair<Matrix, Matrix> thin_qr(const Matrix& m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const Eigen::Index k = std::min(rows, cols);
  const Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = Matrix::Zero(rows, cols);
  q.leftCols(k) = qr.householderQ() * Matrix::Identity(rows, k);
  Matrix r = Matrix::Zero(cols, cols);
  r.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(r)};
}

}  // namespace

TTModel tt_canonicalize(const TTModel& model, std::size_t mode) {
  model.validate();
  if (mode >= model.cores.size()) throw DimensionError("tt_canonicalize: mode out of range");
  TTModel out = model;
  auto& cores = out.cores;

  for (std::size_t k = 0; k < mode; ++k) {
    const auto r0 = static_cast<Eigen::Index>(cores[k].dim(0));
    const auto in = static_cast<Eigen::Index>(cores[k].dim(1));
    const auto r1 = static_cast<Eigen::Index>(cores[k].dim(2));
    auto [q, r] = thin_qr(as_rows(cores[k], r0 * in, r1));
    cores[k] = from_rows(q, cores[k].shape());
    const DenseTensor& next = cores[k + 1];
    const RowMatrix merged = r * as_rows(next, r1, static_cast<Eigen::Index>(next.size()) / r1);
    cores[k + 1] = from_rows(merged, next.shape());
  }

  for (std::size_t k = cores.size() - 1; k > mode; --k) {
    const auto r0 = static_cast<Eigen::Index>(cores[k].dim(0));
    const auto in = static_cast<Eigen::Index>(cores[k].dim(1));
    const auto r1 = static_cast<Eigen::Index>(cores[k].dim(2));
    // M = L Q^T with Q^T having orthonormal rows.
    auto [q, r] = thin_qr(as_rows(cores[k], r0, in * r1).transpose());
    cores[k] = from_rows(q.transpose(), cores[k].shape());
    const DenseTensor& prev = cores[k - 1];
    const RowMatrix merged = as_rows(prev, static_cast<Eigen::Index>(prev.size()) / r0, r0) * r.transpose();
    cores[k - 1] = from_rows(merged, prev.shape());
  }
  return out;
}

StructuredOperator tt_core_operator(const TTModel& model, std::size_t mode) {
  model.validate();
  if (mode >= model.cores.size()) throw DimensionError("tt_core_operator: mode out of range");
  std::vector<DenseTensor> left(model.cores.begin(), model.cores.begin() + static_cast<std::ptrdiff_t>(mode));
  std::vector<DenseTensor> right(model.cores.begin() + static_cast<std::ptrdiff_t>(mode) + 1, model.cores.end());
  return StructuredOperator::tt_chain(left, right);
}

}  // namespace tensor_lift
