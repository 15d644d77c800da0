#include "tensor_lift/leverage.hpp"

#include "tensor_lift/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace tensor_lift {

namespace {

Vector quadratic_forms(const StructuredOperator& op, const Matrix& middle) {
  Vector scores(static_cast<Eigen::Index>(op.rows()));
  Vector a(static_cast<Eigen::Index>(op.cols()));
  for (std::size_t i = 0; i < op.rows(); ++i) {
    op.row_into(i, a);
    scores[static_cast<Eigen::Index>(i)] = a.dot(middle * a);
  }
  return scores;
}

}  // namespace

Vector dense_leverage_scores(const Matrix& a, std::size_t* rank) {
  const PsdPseudoInverse pinv = psd_pseudo_inverse(a.transpose() * a);
  if (rank) *rank = pinv.rank;
  Vector scores(a.rows());
  const Matrix projected = a * pinv.inverse;
  for (Eigen::Index i = 0; i < a.rows(); ++i) scores[i] = std::clamp(projected.row(i).dot(a.row(i)), 0.0, 1.0);
  return scores;
}

LeverageProfile leverage_scores(const StructuredOperator& op) {
  LeverageProfile p;
  if (op.is_kronecker_form()) {
    p.rank = 1;
    for (const auto& f : op.factors()) {
      std::size_t r = 0;
      p.factor_scores.push_back(dense_leverage_scores(f, &r));
      p.rank *= r;
    }
    p.scores.resize(static_cast<Eigen::Index>(op.rows()));
    std::vector<std::size_t> idx(op.factors().size());
    for (std::size_t i = 0; i < op.rows(); ++i) {
      op.factor_indices(i, idx);
      double s = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) s *= p.factor_scores[k][static_cast<Eigen::Index>(idx[k])];
      p.scores[static_cast<Eigen::Index>(i)] = s;
    }
  } else if (op.kind() == OperatorKind::dense) {
    p.scores = dense_leverage_scores(op.factors().front(), &p.rank);
  } else {
    const PsdPseudoInverse pinv = psd_pseudo_inverse(op.gram());
    p.rank = pinv.rank;
    p.scores = quadratic_forms(op, pinv.inverse).cwiseMax(0.0).cwiseMin(1.0);
  }
  p.total = p.scores.sum();
  return p;
}

Vector ridge_leverage_scores(const StructuredOperator& op, double alpha) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("ridge_leverage_scores: alpha must be >= 1");
  double zeta2 = 0.0;
  Vector a(static_cast<Eigen::Index>(op.cols()));
  for (std::size_t i = 0; i < op.rows(); ++i) {
    op.row_into(i, a);
    zeta2 = std::max(zeta2, a.squaredNorm());
  }
  Matrix reg = op.gram();
  reg.diagonal().array() += alpha * zeta2;
  if (zeta2 == 0.0) return Vector::Zero(static_cast<Eigen::Index>(op.rows()));
  const Eigen::LLT<Matrix> llt(reg);
  const Matrix inv = llt.solve(Matrix::Identity(reg.rows(), reg.cols()));
  return quadratic_forms(op, inv);
}

Incoherence incoherence(const StructuredOperator& op) {
  const LeverageProfile p = leverage_scores(op);
  Incoherence out;
  out.rank = p.rank;
  if (p.rank == 0) return out;
  const double s = static_cast<double>(p.rank);
  out.row = static_cast<double>(op.rows()) / s * p.scores.maxCoeff();
  const PsdPseudoInverse pinv = psd_pseudo_inverse(op.gram());
  const Vector col_scores = pinv.range_basis.rowwise().squaredNorm();
  out.column = static_cast<double>(op.cols()) / s * col_scores.maxCoeff();
  return out;
}

LeverageSampler::LeverageSampler(const StructuredOperator& op) : LeverageSampler(op, leverage_scores(op)) {}

LeverageSampler::LeverageSampler(const StructuredOperator& op, LeverageProfile profile)
    : profile_(std::move(profile)) {
  if (static_cast<std::size_t>(profile_.scores.size()) != op.rows())
    throw DimensionError("leverage profile length does not match operator rows");
  if (!(profile_.total > 0.0)) throw SolverError("degenerate leverage profile: all scores are zero");
  if (!profile_.factor_scores.empty()) {
    for (const auto& f : profile_.factor_scores) {
      cdfs_.push_back(cumulative(f));
      factor_rows_.push_back(static_cast<std::size_t>(f.size()));
      factor_totals_.push_back(cdfs_.back().back());
      if (!(factor_totals_.back() > 0.0)) throw SolverError("degenerate leverage profile for a factor");
    }
  } else {
    cdfs_.push_back(cumulative(profile_.scores));
  }
}

std::vector<double> LeverageSampler::cumulative(const Vector& weights) {
  std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  return cdf;
}

std::size_t LeverageSampler::pick(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

std::size_t LeverageSampler::draw(Rng& rng) const {
  if (profile_.factor_scores.empty()) return pick(cdfs_.front(), rng);
  std::size_t i = 0;
  for (std::size_t k = 0; k < cdfs_.size(); ++k) i = i * cdfs_[k].size() + pick(cdfs_[k], rng);
  return i;
}

double LeverageSampler::probability(std::size_t i) const {
  if (profile_.factor_scores.empty()) return profile_.scores[static_cast<Eigen::Index>(i)] / profile_.total;
  double p = 1.0;
  for (std::size_t k = cdfs_.size(); k-- > 0;) {
    const std::size_t j = i % factor_rows_[k];
    i /= factor_rows_[k];
    p *= profile_.factor_scores[k][static_cast<Eigen::Index>(j)] / factor_totals_[k];
  }
  return p;
}

}  // namespace tensor_lift
