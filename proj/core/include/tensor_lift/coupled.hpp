#pragma once

#include "tensor_lift/completion.hpp"

namespace tensor_lift {

/// A X B^T + C Y D^T = E with only the entries of E in `mask` revealed.
struct CoupledInstance {
  Matrix A, B, C, D;
  /// Full n x n right-hand side; only masked entries enter the fit.
  Matrix E;
  ObservationMask mask;
  Matrix X, Y;

  /// X = Y = I.
  static CoupledInstance make(Matrix a, Matrix b, Matrix c, Matrix d, Matrix e, ObservationMask mask);
  void validate() const;

  /// A X B^T + C Y D^T.
  Matrix prediction() const;
  /// Mean squared error over the revealed entries.
  double mse_train() const;
  /// Mean squared error over all entries of E.
  double mse_full() const;
};

enum class CoupledUnknown { x, y };

const char* to_string(CoupledUnknown which);

/// Design for vec(left Z right^T) in terms of vec(Z), both row-major:
/// the Kronecker product left (x) right. Verified against the direct
/// product on a probe matrix before it is returned.
StructuredOperator coupled_operator(const Matrix& left, const Matrix& right);

struct CoupledConfig {
  InnerStrategy strategy = InnerStrategy::direct;
  RichardsonConfig richardson;
  SketchConfig sketch;
  /// Fraction of operator rows sampled per inner iteration by the approx
  /// strategy; overrides sketch.samples when set.
  std::optional<double> sample_rate;
  std::uint64_t seed = 0;
  bool warm_start = false;
  std::size_t threads = 1;
};

struct CoupledStepRecord {
  std::size_t round = 0;
  CoupledUnknown which = CoupledUnknown::x;
  double mse_train = 0.0;
  double mse_full = 0.0;
  double wall_ms = 0.0;
  BlockStats stats;
};

/// Refits one unknown with the other held fixed.
CoupledInstance coupled_half_step(const CoupledInstance& inst, CoupledUnknown which, const CoupledConfig& cfg,
                                  std::uint64_t step_seed, BlockStats* stats = nullptr);

struct CoupledResult {
  Matrix X, Y;
  std::vector<CoupledStepRecord> trace;
};

/// Alternates X and Y half-steps for `rounds` rounds.
CoupledResult coupled_solve(const CoupledInstance& inst, std::size_t rounds, const CoupledConfig& cfg);

}  // namespace tensor_lift
