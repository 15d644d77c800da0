#pragma once

#include "tensor_lift/leverage.hpp"

#include <functional>
#include <optional>

namespace tensor_lift {

struct SketchConfig {
  /// Target accuracy; 0 selects the exact, unsampled solve.
  double epsilon_hat = 0.0;
  /// Failure probability budget.
  double delta = 0.1;
  /// Fixed sample count; overrides the formula below when set.
  std::optional<std::size_t> samples;
  /// Oversampling constant c.
  double oversample = 10.0;
  std::uint64_t seed = 0;

  bool exact() const { return epsilon_hat == 0.0; }
  void validate() const;
  /// ceil(c R log(max(R,2)) / (epsilon_hat delta)), clamped to [1, rows].
  std::size_t sample_count(std::size_t cols, std::size_t rows) const;
};

/// Row-sampled system: design and rhs rows are scaled by 1/sqrt(s p_i).
struct Sketch {
  std::vector<std::size_t> rows;
  Vector weights;
  Matrix design;
  Vector rhs;
};

/// Supplies entry i of the right-hand side; only called for sampled rows.
using RhsProvider = std::function<double(std::size_t)>;

/// With cfg.exact() the full system with unit weights; otherwise s rows drawn
/// i.i.d. from `sampler`.
Sketch sample_sketch(const StructuredOperator& op, const LeverageSampler* sampler, const RhsProvider& rhs,
                     const SketchConfig& cfg, Rng& rng);

struct LeastSquaresResult {
  Vector x;
  bool rank_deficient = false;
  std::size_t samples = 0;
};

/// Exact minimiser via the Gram pseudo-inverse when cfg.exact(); otherwise
/// the solution of the leverage-sampled system.
LeastSquaresResult solve_least_squares(const StructuredOperator& op, const Vector& rhs, const SketchConfig& cfg);

}  // namespace tensor_lift
