#pragma once

#include "tensor_lift/structured_operator.hpp"

#include <span>
#include <string>

namespace tensor_lift {

/// How the spectral factor beta (with P^T P <= A^T A <= beta P^T P) is chosen.
struct BetaPolicy {
  enum class Mode { automatic, exact, heuristic, fixed };

  Mode mode = Mode::automatic;
  /// Used by Mode::fixed.
  double value = 1.0;
  /// Multiplier applied to 2/p when Mode::automatic falls back to the heuristic.
  double heuristic_safety = 1.5;

  static BetaPolicy exact() { return {Mode::exact}; }
  static BetaPolicy heuristic() { return {Mode::heuristic}; }
  static BetaPolicy fixed(double beta) { return {Mode::fixed, beta}; }
  /// "auto", "exact", "heuristic" or a number >= 1.
  static BetaPolicy parse(const std::string& text);
  std::string to_string() const;
};

/// Largest generalised eigenvalue of (gram, masked_gram), clamped to >= 1.
/// Throws SolverError when the masked Gram is numerically singular.
double exact_beta(const Matrix& gram, const Matrix& masked_gram);

double heuristic_beta(double observed_fraction);

/// Exact beta for the row subset `omega` of `op`.
double estimate_beta(const StructuredOperator& op, std::span<const std::size_t> omega);

/// Resolves a policy for a problem with the given Grams and sizes.
double resolve_beta(const BetaPolicy& policy, const Matrix& gram, const Matrix& masked_gram, std::size_t rows,
                    std::size_t observed);

}  // namespace tensor_lift
