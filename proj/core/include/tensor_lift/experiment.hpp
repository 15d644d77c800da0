#pragma once

#include "tensor_lift/coupled.hpp"

#include <iosfwd>

namespace tensor_lift::experiment {

enum class GeneratorKind { random_cp, random_tucker, random_tt, coupled };

GeneratorKind parse_generator(const std::string& text);
const char* to_string(GeneratorKind kind);

struct SyntheticTensor {
  DenseTensor tensor;
  Model model;
};

/// Reconstructs a random model whose parameters are i.i.d. uniform on [0,1).
/// ranks: cp {R}; tucker {R_1..R_N}; tt {R_1..R_{N-1}}.
SyntheticTensor generate_tensor(GeneratorKind kind, const Shape& shape, const Shape& ranks, std::uint64_t seed);

struct CoupledData {
  Matrix A, B, C, D, X, Y, E;
};

/// Uniform [0,1) A, B, C, D, X, Y (n x d, d x d) and E = A X B^T + C Y D^T.
CoupledData generate_coupled(std::size_t n, std::size_t d, std::uint64_t seed);

/// Exactly round(p I) distinct entries (at least one), drawn uniformly.
ObservationMask random_mask(const Shape& shape, double p, std::uint64_t seed);

/// Settings shared by the complete, coupled and bench runs.
struct RunSpec {
  ModelKind kind = ModelKind::cp;
  Shape ranks;
  InnerStrategy strategy = InnerStrategy::direct;
  double epsilon = 1e-6;
  double epsilon_hat = 0.0;
  /// epsilon_hat = scale / beta^2; used by the approx strategy when set.
  std::optional<double> epsilon_hat_scale;
  double delta = 0.1;
  double oversample = 10.0;
  std::optional<std::size_t> samples;
  /// Fraction of operator rows sampled per inner iteration (approx strategy).
  std::optional<double> sample_rate;
  BetaPolicy beta;
  std::size_t rounds = 10;
  std::uint64_t seed = 0;
  /// Extrapolated steps for the approx strategy.
  bool accelerate = false;
  bool warm_start = false;
  /// Populate wall-clock columns; otherwise they are written as 0 so that
  /// equal seeds give byte-identical output.
  bool timing = false;
  std::size_t threads = 1;

  RichardsonConfig richardson() const;
  SketchConfig sketch() const;
  AlsPlan plan() const;
};

inline constexpr const char* kCompletionHeader =
    "round,block,strategy,epsilon,epsilon_hat,p,R,train_rre,test_rre,wall_ms,inner_iters,beta";
inline constexpr const char* kCoupledHeader =
    "round,half,strategy,epsilon,epsilon_hat,p,d,mse_train,mse_full,wall_ms,inner_iters,beta";
inline constexpr const char* kBenchHeader =
    "strategy,p,R,epsilon,epsilon_hat,rounds,train_rre,test_rre,wall_ms,inner_iters,beta";

/// Completion of `truth` observed on `mask`; one CSV row per (round, block).
/// Test RRE is measured against all entries of `truth`.
void write_completion_csv(std::ostream& os, const DenseTensor& truth, const ObservationMask& mask,
                          const RunSpec& spec, CompletionResult* result = nullptr);

void write_coupled_csv(std::ostream& os, const CoupledInstance& inst, const RunSpec& spec,
                       CoupledResult* result = nullptr);

struct BenchGrid {
  RunSpec base;
  std::vector<InnerStrategy> strategies;
  std::vector<double> rates;
  /// Data to mask; generated from the fields below when absent.
  std::optional<DenseTensor> input;
  GeneratorKind generator = GeneratorKind::random_cp;
  Shape shape;
  Shape generator_ranks;
  std::size_t workers = 1;
};

/// One row per (p, strategy): final RREs and totals over all rounds. The
/// same masked data is used for every strategy at a given p.
void write_bench_csv(std::ostream& os, const BenchGrid& grid);

/// Worker-thread cap from TENSOR_LIFT_THREADS (1 when unset or invalid).
std::size_t thread_cap_from_env();

}  // namespace tensor_lift::experiment
