#pragma once

#include "tensor_lift/random.hpp"
#include "tensor_lift/structured_operator.hpp"

namespace tensor_lift {

/// Row leverage scores l_i = (A (A^T A)^+ A^T)_ii.
struct LeverageProfile {
  Vector scores;
  /// Sum of scores; equals rank(A) for an exact profile.
  double total = 0.0;
  std::size_t rank = 0;
  /// Per-factor profiles when the operator is a Kronecker product; the full
  /// profile is then their outer product.
  std::vector<Vector> factor_scores;
};

LeverageProfile leverage_scores(const StructuredOperator& op);

/// Leverage scores of a dense matrix.
Vector dense_leverage_scores(const Matrix& a, std::size_t* rank = nullptr);

/// a_i^T (A^T A + alpha zeta^2 I)^{-1} a_i with zeta the largest row norm.
/// Every score is at most 1/alpha.
Vector ridge_leverage_scores(const StructuredOperator& op, double alpha);

struct Incoherence {
  /// (I/s) max_i l_i over rows.
  double row = 1.0;
  /// (R/s) max_r ||V^T e_r||^2 over columns.
  double column = 1.0;
  std::size_t rank = 0;
};

Incoherence incoherence(const StructuredOperator& op);

/// Draws row indices i.i.d. with probability l_i / rank(A).
///
/// Kronecker-form operators sample one index per factor from the factor's
/// own distribution, which yields the same law without touching all rows.
class LeverageSampler {
 public:
  explicit LeverageSampler(const StructuredOperator& op);
  LeverageSampler(const StructuredOperator& op, LeverageProfile profile);

  const LeverageProfile& profile() const { return profile_; }

  std::size_t draw(Rng& rng) const;
  /// Sampling probability of row i.
  double probability(std::size_t i) const;

 private:
  static std::vector<double> cumulative(const Vector& weights);
  static std::size_t pick(const std::vector<double>& cdf, Rng& rng);

  LeverageProfile profile_;
  std::vector<std::vector<double>> cdfs_;
  std::vector<double> factor_totals_;
  std::vector<std::size_t> factor_rows_;
};

}  // namespace tensor_lift
