#include "tensor_lift/least_squares.hpp"

#include "tensor_lift/linalg.hpp"

#include <cmath>

namespace tensor_lift {

void SketchConfig::validate() const {
  if (!(epsilon_hat >= 0.0 && epsilon_hat < 1.0)) throw std::invalid_argument("epsilon_hat must lie in [0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(oversample > 0.0)) throw std::invalid_argument("oversampling constant must be positive");
  if (samples && *samples == 0) throw std::invalid_argument("sample count must be positive");
}

std::size_t SketchConfig::sample_count(std::size_t cols, std::size_t rows) const {
  if (samples) return std::min(*samples, rows);
  if (exact()) return rows;
  const double r = static_cast<double>(cols);
  const double s = std::ceil(oversample * r * std::log(std::max(r, 2.0)) / (epsilon_hat * delta));
  if (!(s < static_cast<double>(rows))) return rows;
  return std::max<std::size_t>(1, static_cast<std::size_t>(s));
}

Sketch sample_sketch(const StructuredOperator& op, const LeverageSampler* sampler, const RhsProvider& rhs,
                     const SketchConfig& cfg, Rng& rng) {
  Sketch sk;
  if (cfg.exact()) {
    sk.rows.resize(op.rows());
    for (std::size_t i = 0; i < op.rows(); ++i) sk.rows[i] = i;
    sk.weights = Vector::Ones(static_cast<Eigen::Index>(op.rows()));
    sk.design = op.materialize();
    sk.rhs.resize(static_cast<Eigen::Index>(op.rows()));
    for (std::size_t i = 0; i < op.rows(); ++i) sk.rhs[static_cast<Eigen::Index>(i)] = rhs(i);
    return sk;
  }
  if (!sampler) throw SolverError("sample_sketch: a leverage sampler is required when epsilon_hat > 0");
  const std::size_t s = cfg.sample_count(op.cols(), op.rows());
  sk.rows.resize(s);
  sk.weights.resize(static_cast<Eigen::Index>(s));
  sk.design.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(op.cols()));
  sk.rhs.resize(static_cast<Eigen::Index>(s));
  Vector a(static_cast<Eigen::Index>(op.cols()));
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t i = sampler->draw(rng);
    const double w = 1.0 / std::sqrt(static_cast<double>(s) * sampler->probability(i));
    const auto kk = static_cast<Eigen::Index>(k);
    sk.rows[k] = i;
    sk.weights[kk] = w;
    op.row_into(i, a);
    sk.design.row(kk) = w * a.transpose();
    sk.rhs[kk] = w * rhs(i);
  }
  return sk;
}

LeastSquaresResult solve_least_squares(const StructuredOperator& op, const Vector& rhs, const SketchConfig& cfg) {
  if (static_cast<std::size_t>(rhs.size()) != op.rows()) throw DimensionError("solve_least_squares: rhs length");
  cfg.validate();
  LeastSquaresResult out;
  if (cfg.exact()) {
    const PsdPseudoInverse pinv = psd_pseudo_inverse(op.gram());
    out.x = pinv.inverse * op.transpose_multiply(rhs);
    out.rank_deficient = pinv.rank_deficient;
    out.samples = op.rows();
    return out;
  }
  const LeverageSampler sampler(op);
  Rng rng(cfg.seed);
  const Sketch sk = sample_sketch(
      op, &sampler, [&](std::size_t i) { return rhs[static_cast<Eigen::Index>(i)]; }, cfg, rng);
  const PsdPseudoInverse pinv = psd_pseudo_inverse(sk.design.transpose() * sk.design);
  out.x = pinv.inverse * (sk.design.transpose() * sk.rhs);
  out.rank_deficient = pinv.rank_deficient;
  out.samples = sk.rows.size();
  return out;
}

}  // namespace tensor_lift
