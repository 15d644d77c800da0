#pragma once

#include "tensor_lift/beta.hpp"
#include "tensor_lift/least_squares.hpp"
#include "tensor_lift/linalg.hpp"

#include <memory>
#include <optional>

namespace tensor_lift {

/// A full design matrix with the quantities every lifted solve against it
/// reuses: its Gram, the Gram pseudo-inverse and (optionally) a leverage
/// sampler. Immutable once built.
class PreparedOperator {
 public:
  explicit PreparedOperator(StructuredOperator op, bool with_sampler = false);

  const StructuredOperator& op() const { return op_; }
  const Matrix& gram() const { return gram_; }
  const PsdPseudoInverse& gram_pinv() const { return pinv_; }
  bool has_sampler() const { return sampler_.has_value(); }
  /// Throws SolverError if the operator was prepared without a sampler.
  const LeverageSampler& sampler() const;

 private:
  StructuredOperator op_;
  Matrix gram_;
  PsdPseudoInverse pinv_;
  std::optional<LeverageSampler> sampler_;
};

/// Masked least squares min ||A_Omega x - q|| posed on the full design A.
///
/// The zero-masked pair (P~, q~) equals (A, q) on the rows in Omega and zero
/// elsewhere; it is never formed. A_Omega is gathered once at construction.
class LiftedProblem {
 public:
  LiftedProblem(std::shared_ptr<const PreparedOperator> op, std::vector<std::size_t> omega, Vector q);

  const PreparedOperator& prepared() const { return *op_; }
  const std::shared_ptr<const PreparedOperator>& prepared_ptr() const { return op_; }
  const StructuredOperator& op() const { return op_->op(); }
  const std::vector<std::size_t>& omega() const { return omega_; }
  const Vector& q() const { return q_; }
  std::size_t cols() const { return op().cols(); }

  /// A_Omega, |Omega| x R.
  const Matrix& masked_design() const { return masked_; }
  /// P~^T P~ = A_Omega^T A_Omega.
  const Matrix& masked_gram() const { return masked_gram_; }

  /// ||P~ x - q~||_2.
  double masked_residual(const Vector& x) const;
  /// Position of `row` in omega, if observed.
  std::optional<std::size_t> observed_position(std::size_t row) const;

 private:
  std::shared_ptr<const PreparedOperator> op_;
  std::vector<std::size_t> omega_;
  Vector q_;
  Matrix masked_;
  Matrix masked_gram_;
};

struct RichardsonConfig {
  /// Reducible-error budget, in (0,1).
  double epsilon = 1e-6;
  /// Inner least-squares accuracy, in [0, 1/beta^2).
  double epsilon_hat = 0.0;
  /// When set, epsilon_hat is taken as this value divided by beta^2 once beta
  /// is known.
  std::optional<double> epsilon_hat_beta_scale;
  BetaPolicy beta;
  /// Cap on outer iterations; the bound from iteration_bound() otherwise.
  std::optional<std::size_t> max_iters;
  /// Stop when ||x_{k+1} - x_k|| <= stop_tol ||x_{k+1}||; 0 disables.
  double stop_tol = 0.0;
  bool accelerate = false;

  /// Checks epsilon, and epsilon_hat < 1/beta^2 when beta is fixed.
  void validate() const;
  /// epsilon_hat effective for this beta; throws SolverError if >= 1/beta^2.
  double resolved_epsilon_hat(double beta) const;
};

/// ceil(log(2 beta / epsilon) / (2 (1/beta - sqrt(epsilon_hat)))), natural log.
/// The solver runs this many steps plus one.
std::size_t iteration_bound(double beta, double epsilon, double epsilon_hat);

/// 1 + 2 epsilon_hat / (1/beta - sqrt(epsilon_hat))^2: the factor on the
/// optimal masked residual in the final-residual guarantee.
double residual_bound_factor(double beta, double epsilon_hat);

struct SolveReport {
  Vector x;
  std::size_t iterations = 0;
  /// ||P~ x_k - q~|| after every outer iteration.
  std::vector<double> residuals;
  double wall_ms = 0.0;
  double beta = 1.0;
  double epsilon_hat = 0.0;
  std::size_t sampled_rows = 0;
  bool rank_deficient = false;
};

/// One mini-ALS step: impute the unobserved responses with A x_k, then solve
/// the full structured problem (1+epsilon_hat)-approximately. Only Omega
/// entries are touched when sketch.exact(); otherwise only sampled rows.
Vector mini_als_step(const LiftedProblem& prob, const Vector& x, const SketchConfig& sketch, Rng& rng);

/// The EM / parafac-style baseline: a single mini-ALS step.
Vector em_one_step(const LiftedProblem& prob, const Vector& x, const SketchConfig& sketch, Rng& rng);

/// Algorithm approx-mini-als, from x0 = 0 unless `start` is given.
SolveReport approx_mini_als(const LiftedProblem& prob, const RichardsonConfig& cfg, const SketchConfig& sketch,
                            const std::optional<Vector>& start = std::nullopt);

/// approx_mini_als with the adaptive extrapolation on even iterations.
SolveReport accelerated_mini_als(const LiftedProblem& prob, RichardsonConfig cfg, const SketchConfig& sketch,
                                 const std::optional<Vector>& start = std::nullopt);

/// Normal-equation solution of the masked problem (the direct strategy).
Vector solve_masked_direct(const LiftedProblem& prob, bool* rank_deficient = nullptr);

}  // namespace tensor_lift
