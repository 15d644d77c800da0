#pragma once

#include "tensor_lift/lifted_solver.hpp"
#include "tensor_lift/models.hpp"

#include <optional>

namespace tensor_lift {

/// How each block's masked least-squares subproblem is solved.
enum class InnerStrategy {
  direct,       ///< normal equations on the observed rows
  parafac,      ///< one mini-ALS step from the current block value
  mini_als,     ///< approx-mini-als with exact inner solves
  accelerated,  ///< mini_als with adaptive extrapolation
  approx,       ///< approx-mini-als with leverage-sampled inner solves
};

const char* to_string(InnerStrategy s);
/// Accepts direct, parafac, mini-als, accel (or accelerated), approx.
InnerStrategy parse_strategy(const std::string& text);

enum class InitPolicy { uniform, hosvd };

struct AlsPlan {
  ModelKind kind = ModelKind::cp;
  /// cp: {R}; tucker: {R_1..R_N}; tt: interior ranks {R_1..R_{N-1}}.
  Shape ranks;
  InnerStrategy strategy = InnerStrategy::direct;
  std::size_t rounds = 10;
  RichardsonConfig richardson;
  SketchConfig sketch;
  InitPolicy init = InitPolicy::uniform;
  std::uint64_t seed = 0;
  /// Start inner Richardson solves from the current block value instead of 0.
  bool warm_start = false;
  /// Bring TT models into canonical form for the updated core first.
  bool tt_canonicalize = true;
  std::size_t threads = 1;

  void validate(const Shape& shape) const;
};

/// Observed tensor values plus, per mode, the observed entries grouped by
/// their mode index: slice i of mode n lists the unfolding columns and values
/// of the revealed entries with i_n = i.
class MaskedTensor {
 public:
  struct Slices {
    std::vector<std::vector<std::size_t>> columns;
    std::vector<Vector> values;
  };

  MaskedTensor(DenseTensor values, ObservationMask mask);

  const DenseTensor& values() const { return values_; }
  const ObservationMask& mask() const { return mask_; }
  const Shape& shape() const { return values_.shape(); }
  const Slices& slices(std::size_t mode) const { return slices_.at(mode); }
  Vector observed() const { return mask_.gather(values_); }

 private:
  DenseTensor values_;
  ObservationMask mask_;
  std::vector<Slices> slices_;
};

struct BlockStats {
  std::size_t inner_iters = 0;
  std::size_t sampled_rows = 0;
  /// Rows with no observations, left unchanged.
  std::size_t skipped_rows = 0;
  /// Rows whose masked Gram was singular, solved by the pseudo-inverse.
  std::size_t fallback_rows = 0;
  double beta_sum = 0.0;
  std::size_t beta_count = 0;

  /// NaN when no beta was computed.
  double mean_beta() const;
  void merge(const BlockStats& other);
};

struct FitRecord {
  std::size_t round = 0;
  std::string block;
  double train_rre = 0.0;
  std::optional<double> test_rre;
  double wall_ms = 0.0;
  BlockStats stats;
};

struct FitTrace {
  std::vector<FitRecord> records;
};

struct CompletionResult {
  Model model;
  FitTrace trace;
};

Model initialize_model(const MaskedTensor& x, const AlsPlan& plan);

CPModel cp_factor_update(const MaskedTensor& x, const CPModel& model, std::size_t mode, const AlsPlan& plan,
                         std::uint64_t seed, BlockStats* stats = nullptr);
TuckerModel tucker_core_update(const MaskedTensor& x, const TuckerModel& model, const AlsPlan& plan,
                               std::uint64_t seed, BlockStats* stats = nullptr);
TuckerModel tucker_factor_update(const MaskedTensor& x, const TuckerModel& model, std::size_t mode,
                                 const AlsPlan& plan, std::uint64_t seed, BlockStats* stats = nullptr);
TTModel tt_core_update(const MaskedTensor& x, const TTModel& model, std::size_t mode, const AlsPlan& plan,
                       std::uint64_t seed, BlockStats* stats = nullptr);

/// Gauge transform making cores before `mode` left-orthogonal and cores after
/// it right-orthogonal, so the interface design of `mode` has orthonormal
/// columns. The represented tensor is unchanged.
TTModel tt_canonicalize(const TTModel& model, std::size_t mode);

/// Design matrix of the TT core update at `mode`.
StructuredOperator tt_core_operator(const TTModel& model, std::size_t mode);

namespace detail {
/// Solves one masked subproblem per slice against the shared design `op`;
/// row i of `current` is the present value of subproblem i.
Matrix solve_block_rows(const StructuredOperator& op, const MaskedTensor::Slices& slices, const Matrix& current,
                        const AlsPlan& plan, std::uint64_t seed, BlockStats* stats);
}  // namespace detail

CompletionResult run_completion(const MaskedTensor& x, const AlsPlan& plan,
                                const DenseTensor* ground_truth = nullptr);

}  // namespace tensor_lift
