#include "tensor_lift/coupled.hpp"

#include "tensor_lift/random.hpp"

#include <chrono>
#include <cmath>

namespace tensor_lift {

namespace {

Vector vec_rows(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
  return v;
}

Matrix unvec_rows(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = v.segment(i * cols, cols).transpose();
  return m;
}

}  // namespace

CoupledInstance CoupledInstance::make(Matrix a, Matrix b, Matrix c, Matrix d, Matrix e, ObservationMask mask) {
  CoupledInstance inst{std::move(a), std::move(b), std::move(c), std::move(d), std::move(e), std::move(mask), {}, {}};
  inst.X = Matrix::Identity(inst.A.cols(), inst.B.cols());
  inst.Y = Matrix::Identity(inst.C.cols(), inst.D.cols());
  inst.validate();
  return inst;
}

void CoupledInstance::validate() const {
  const Eigen::Index n = E.rows();
  if (E.cols() != n) throw DimensionError("coupled: E must be square");
  for (const Matrix* m : {&A, &B, &C, &D})
    if (m->rows() != n || m->cols() == 0) throw DimensionError("coupled: A, B, C, D must have n rows");
  if (X.rows() != A.cols() || X.cols() != B.cols()) throw DimensionError("coupled: X shape mismatch");
  if (Y.rows() != C.cols() || Y.cols() != D.cols()) throw DimensionError("coupled: Y shape mismatch");
  if (mask.shape() != Shape{static_cast<std::size_t>(n), static_cast<std::size_t>(n)})
    throw DimensionError("coupled: mask shape does not match E");
}

Matrix CoupledInstance::prediction() const { return A * X * B.transpose() + C * Y * D.transpose(); }

double CoupledInstance::mse_train() const {
  if (mask.empty()) return 0.0;
  const Matrix p = prediction();
  double acc = 0.0;
  for (auto l : mask.indices()) {
    const auto i = static_cast<Eigen::Index>(l / static_cast<std::size_t>(E.cols()));
    const auto j = static_cast<Eigen::Index>(l % static_cast<std::size_t>(E.cols()));
    const double r = p(i, j) - E(i, j);
    acc += r * r;
  }
  return acc / static_cast<double>(mask.count());
}

double CoupledInstance::mse_full() const { return (prediction() - E).squaredNorm() / static_cast<double>(E.size()); }

const char* to_string(CoupledUnknown which) { return which == CoupledUnknown::x ? "X" : "Y"; }

StructuredOperator coupled_operator(const Matrix& left, const Matrix& right) {
  StructuredOperator op = StructuredOperator::kronecker({left, right});
  Matrix probe(left.cols(), right.cols());
  for (Eigen::Index i = 0; i < probe.rows(); ++i)
    for (Eigen::Index j = 0; j < probe.cols(); ++j) probe(i, j) = 1.0 + 0.5 * static_cast<double>(i) - 0.25 * static_cast<double>(j);
  const Matrix expect = left * probe * right.transpose();
  const Vector v = vec_rows(probe);
  const Eigen::Index checks = std::min<Eigen::Index>(expect.size(), 16);
  for (Eigen::Index k = 0; k < checks; ++k) {
    const Eigen::Index l = (k * 7919) % expect.size();
    const double want = expect(l / expect.cols(), l % expect.cols());
    const double got = op.row_dot(static_cast<std::size_t>(l), v);
    if (std::abs(got - want) > 1e-9 * (1.0 + std::abs(want)))
      throw std::logic_error("coupled operator does not reproduce vec(L Z R^T)");
  }
  return op;
}

CoupledInstance coupled_half_step(const CoupledInstance& inst, CoupledUnknown which, const CoupledConfig& cfg,
                                  std::uint64_t step_seed, BlockStats* stats) {
  inst.validate();
  const bool is_x = which == CoupledUnknown::x;
  const Matrix& left = is_x ? inst.A : inst.C;
  const Matrix& right = is_x ? inst.B : inst.D;
  const Matrix fixed = is_x ? Matrix(inst.C * inst.Y * inst.D.transpose()) : Matrix(inst.A * inst.X * inst.B.transpose());
  const Matrix& current = is_x ? inst.X : inst.Y;

  AlsPlan plan;
  plan.strategy = cfg.strategy;
  plan.richardson = cfg.richardson;
  plan.sketch = cfg.sketch;
  plan.warm_start = cfg.warm_start;
  plan.threads = cfg.threads;

  StructuredOperator op = coupled_operator(left, right);
  if (cfg.sample_rate && cfg.strategy == InnerStrategy::approx) {
    const double s = std::ceil(*cfg.sample_rate * static_cast<double>(op.rows()));
    plan.sketch.samples = std::max<std::size_t>(1, static_cast<std::size_t>(s));
  }

  // Reuse the completion block machinery: one "slice" holding every revealed entry.
  MaskedTensor::Slices slices;
  slices.columns.emplace_back(inst.mask.indices().begin(), inst.mask.indices().end());
  Vector q(static_cast<Eigen::Index>(inst.mask.count()));
  const auto n = static_cast<std::size_t>(inst.E.cols());
  for (std::size_t k = 0; k < inst.mask.count(); ++k) {
    const auto l = inst.mask.indices()[k];
    const auto i = static_cast<Eigen::Index>(l / n), j = static_cast<Eigen::Index>(l % n);
    q[static_cast<Eigen::Index>(k)] = inst.E(i, j) - fixed(i, j);
  }
  slices.values.push_back(std::move(q));

  Matrix cur(1, current.size());
  cur.row(0) = vec_rows(current).transpose();
  const Matrix solved = detail::solve_block_rows(op, slices, cur, plan, step_seed, stats);
  CoupledInstance out = inst;
  (is_x ? out.X : out.Y) = unvec_rows(solved.row(0).transpose(), current.rows(), current.cols());
  return out;
}

CoupledResult coupled_solve(const CoupledInstance& inst, std::size_t rounds, const CoupledConfig& cfg) {
  if (rounds == 0) throw std::invalid_argument("rounds must be at least 1");
  inst.validate();
  CoupledResult result;
  CoupledInstance cur = inst;
  std::size_t step = 0;
  for (std::size_t round = 1; round <= rounds; ++round) {
    for (CoupledUnknown which : {CoupledUnknown::x, CoupledUnknown::y}) {
      const auto t0 = std::chrono::steady_clock::now();
      CoupledStepRecord rec;
      rec.round = round;
      rec.which = which;
      cur = coupled_half_step(cur, which, cfg, derive_seed(cfg.seed, step++), &rec.stats);
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rec.mse_train = cur.mse_train();
      rec.mse_full = cur.mse_full();
      result.trace.push_back(rec);
    }
  }
  result.X = cur.X;
  result.Y = cur.Y;
  return result;
}

}  // namespace tensor_lift
