#include "tensor_lift/lifted_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace tensor_lift {

PreparedOperator::PreparedOperator(StructuredOperator op, bool with_sampler)
    : op_(std::move(op)), gram_(op_.gram()), pinv_(psd_pseudo_inverse(gram_)) {
  if (with_sampler) sampler_.emplace(op_);
}

const LeverageSampler& PreparedOperator::sampler() const {
  if (!sampler_) throw SolverError("operator was prepared without a leverage sampler");
  return *sampler_;
}

LiftedProblem::LiftedProblem(std::shared_ptr<const PreparedOperator> op, std::vector<std::size_t> omega, Vector q)
    : op_(std::move(op)), omega_(std::move(omega)), q_(std::move(q)) {
  if (!op_) throw std::invalid_argument("LiftedProblem: null operator");
  if (static_cast<std::size_t>(q_.size()) != omega_.size())
    throw DimensionError("LiftedProblem: q and omega lengths differ");
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    if (omega_[k] >= op_->op().rows()) throw DimensionError("LiftedProblem: observed row out of range");
    if (k && omega_[k] <= omega_[k - 1]) throw DimensionError("LiftedProblem: omega must be strictly ascending");
  }
  masked_ = op_->op().gather_rows(omega_);
  masked_gram_ = masked_.transpose() * masked_;
}

double LiftedProblem::masked_residual(const Vector& x) const { return (masked_ * x - q_).norm(); }

std::optional<std::size_t> LiftedProblem::observed_position(std::size_t row) const {
  auto it = std::lower_bound(omega_.begin(), omega_.end(), row);
  if (it == omega_.end() || *it != row) return std::nullopt;
  return static_cast<std::size_t>(it - omega_.begin());
}

void RichardsonConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (!(epsilon_hat >= 0.0)) throw std::invalid_argument("epsilon_hat must be non-negative");
  if (epsilon_hat_beta_scale && !(*epsilon_hat_beta_scale >= 0.0 && *epsilon_hat_beta_scale < 1.0))
    throw std::invalid_argument("epsilon_hat scale must lie in [0,1)");
  if (!(stop_tol >= 0.0)) throw std::invalid_argument("stop_tol must be non-negative");
  if (max_iters && *max_iters == 0) throw std::invalid_argument("max_iters must be positive");
  if (beta.mode == BetaPolicy::Mode::fixed) (void)resolved_epsilon_hat(beta.value);
}

double RichardsonConfig::resolved_epsilon_hat(double beta_value) const {
  const double e = epsilon_hat_beta_scale ? *epsilon_hat_beta_scale / (beta_value * beta_value) : epsilon_hat;
  if (!(e < 1.0 / (beta_value * beta_value))) {
    throw SolverError("epsilon_hat must be below 1/beta^2 (beta = " + std::to_string(beta_value) + ")");
  }
  return e;
}

std::size_t iteration_bound(double beta, double epsilon, double epsilon_hat) {
  if (!(beta >= 1.0)) throw std::invalid_argument("beta must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (!(epsilon_hat >= 0.0 && epsilon_hat < 1.0 / (beta * beta)))
    throw SolverError("epsilon_hat must lie in [0, 1/beta^2)");
  const double gap = 1.0 / beta - std::sqrt(epsilon_hat);
  return static_cast<std::size_t>(std::ceil(std::log(2.0 * beta / epsilon) / (2.0 * gap)));
}

double residual_bound_factor(double beta, double epsilon_hat) {
  const double gap = 1.0 / beta - std::sqrt(epsilon_hat);
  return 1.0 + 2.0 * epsilon_hat / (gap * gap);
}

namespace {

// x_{k+1} = G^+ A^T q~^(k) with A^T q~^(k) = G x - A_Omega^T (A_Omega x - q):
// only the observed rows enter.
Vector exact_step(const LiftedProblem& prob, const Vector& x) {
  const Matrix& g = prob.prepared().gram();
  const Vector rhs = g * x - prob.masked_design().transpose() * (prob.masked_design() * x - prob.q());
  return prob.prepared().gram_pinv().inverse * rhs;
}

Vector sampled_step(const LiftedProblem& prob, const Vector& x, const SketchConfig& sketch, Rng& rng) {
  const StructuredOperator& op = prob.op();
  const Vector& q = prob.q();
  // q~^(k)_i = q_i on Omega and a_i^T x elsewhere, evaluated per sampled row.
  auto rhs = [&](std::size_t i) {
    if (auto pos = prob.observed_position(i)) return q[static_cast<Eigen::Index>(*pos)];
    return op.row_dot(i, x);
  };
  const Sketch sk = sample_sketch(op, &prob.prepared().sampler(), rhs, sketch, rng);
  const PsdPseudoInverse pinv = psd_pseudo_inverse(sk.design.transpose() * sk.design);
  return pinv.inverse * (sk.design.transpose() * sk.rhs);
}

SolveReport run(const LiftedProblem& prob, const RichardsonConfig& cfg, const SketchConfig& sketch,
                const std::optional<Vector>& start, bool accelerate) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  sketch.validate();
  SolveReport report;
  report.beta = resolve_beta(cfg.beta, prob.prepared().gram(), prob.masked_gram(), prob.op().rows(),
                             prob.omega().size());
  report.epsilon_hat = cfg.resolved_epsilon_hat(report.beta);
  SketchConfig step_sketch = sketch;
  step_sketch.epsilon_hat = report.epsilon_hat;
  if (!step_sketch.exact() && !prob.prepared().has_sampler())
    throw SolverError("approximate inner solves need an operator prepared with a sampler");

  const std::size_t bound = iteration_bound(report.beta, cfg.epsilon, report.epsilon_hat);
  std::size_t steps = bound + 1;
  if (cfg.max_iters) steps = std::min(steps, *cfg.max_iters);

  const auto R = static_cast<Eigen::Index>(prob.cols());
  Vector x = start ? *start : Vector::Zero(R);
  if (x.size() != R) throw DimensionError("start vector has the wrong length");
  Vector prev = x;
  Rng rng(sketch.seed);
  const std::size_t per_step_samples =
      step_sketch.exact() ? prob.omega().size() : step_sketch.sample_count(prob.cols(), prob.op().rows());
  report.residuals.reserve(steps);
  report.rank_deficient = prob.prepared().gram_pinv().rank_deficient;

  for (std::size_t k = 0; k < steps; ++k) {
    Vector next = step_sketch.exact() ? exact_step(prob, x) : sampled_step(prob, x, step_sketch, rng);
    report.sampled_rows += per_step_samples;
    // Iteration k+1 is even when k is odd: extrapolate along x_k - x_{k-1}.
    if (accelerate && k % 2 == 1) {
      const double denom = (x - prev).norm();
      if (denom > 1e-14) {
        const double alpha = (next - x).norm() / denom;
        if (alpha < 1.0) next = x + (next - x) / (1.0 - alpha);
      }
    }
    const double change = (next - x).norm();
    prev = std::move(x);
    x = std::move(next);
    report.residuals.push_back(prob.masked_residual(x));
    ++report.iterations;
    if (cfg.stop_tol > 0.0 && change <= cfg.stop_tol * x.norm()) break;
  }
  report.x = std::move(x);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace

Vector mini_als_step(const LiftedProblem& prob, const Vector& x, const SketchConfig& sketch, Rng& rng) {
  if (x.size() != static_cast<Eigen::Index>(prob.cols())) throw DimensionError("mini_als_step: iterate length");
  if (sketch.exact()) return exact_step(prob, x);
  return sampled_step(prob, x, sketch, rng);
}

Vector em_one_step(const LiftedProblem& prob, const Vector& x, const SketchConfig& sketch, Rng& rng) {
  return mini_als_step(prob, x, sketch, rng);
}

SolveReport approx_mini_als(const LiftedProblem& prob, const RichardsonConfig& cfg, const SketchConfig& sketch,
                            const std::optional<Vector>& start) {
  return run(prob, cfg, sketch, start, cfg.accelerate);
}

SolveReport accelerated_mini_als(const LiftedProblem& prob, RichardsonConfig cfg, const SketchConfig& sketch,
                                 const std::optional<Vector>& start) {
  cfg.accelerate = true;
  return run(prob, cfg, sketch, start, true);
}

Vector solve_masked_direct(const LiftedProblem& prob, bool* rank_deficient) {
  const PsdPseudoInverse pinv = psd_pseudo_inverse(prob.masked_gram());
  if (rank_deficient) *rank_deficient = pinv.rank_deficient;
  return pinv.inverse * (prob.masked_design().transpose() * prob.q());
}

}  // namespace tensor_lift
