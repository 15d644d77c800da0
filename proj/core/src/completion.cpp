#include "tensor_lift/completion.hpp"

#include "tensor_lift/random.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace tensor_lift {

const char* to_string(InnerStrategy s) {
  switch (s) {
    case InnerStrategy::direct: return "direct";
    case InnerStrategy::parafac: return "parafac";
    case InnerStrategy::mini_als: return "mini-als";
    case InnerStrategy::accelerated: return "accel";
    case InnerStrategy::approx: return "approx";
  }
  return "?";
}

InnerStrategy parse_strategy(const std::string& text) {
  if (text == "direct") return InnerStrategy::direct;
  if (text == "parafac") return InnerStrategy::parafac;
  if (text == "mini-als") return InnerStrategy::mini_als;
  if (text == "accel" || text == "accelerated") return InnerStrategy::accelerated;
  if (text == "approx") return InnerStrategy::approx;
  throw std::invalid_argument("unknown strategy '" + text + "'");
}

void AlsPlan::validate(const Shape& shape) const {
  if (rounds == 0) throw std::invalid_argument("rounds must be at least 1");
  for (auto r : ranks)
    if (r == 0) throw std::invalid_argument("ranks must be positive");
  const std::size_t expected = kind == ModelKind::cp ? 1 : kind == ModelKind::tucker ? shape.size() : shape.size() - 1;
  if (ranks.size() != expected) {
    throw std::invalid_argument(std::string(to_string(kind)) + " model on an order-" + std::to_string(shape.size()) +
                                " tensor needs " + std::to_string(expected) + " rank value(s)");
  }
  richardson.validate();
  sketch.validate();
}

MaskedTensor::MaskedTensor(DenseTensor values, ObservationMask mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_.shape() != values_.shape()) throw DimensionError("mask shape does not match tensor shape");
  const Shape& shape = values_.shape();
  slices_.resize(shape.size());
  for (std::size_t n = 0; n < shape.size(); ++n) {
    std::size_t inner = 1;
    for (std::size_t k = n + 1; k < shape.size(); ++k) inner *= shape[k];
    const std::size_t extent = shape[n];
    Slices& s = slices_[n];
    s.columns.assign(extent, {});
    std::vector<std::vector<double>> vals(extent);
    for (auto l : mask_.indices()) {
      const std::size_t outer = l / (extent * inner);
      const std::size_t i = (l / inner) % extent;
      s.columns[i].push_back(outer * inner + l % inner);
      vals[i].push_back(values_[l]);
    }
    s.values.resize(extent);
    for (std::size_t i = 0; i < extent; ++i)
      s.values[i] = Eigen::Map<const Vector>(vals[i].data(), static_cast<Eigen::Index>(vals[i].size()));
  }
}

double BlockStats::mean_beta() const {
  return beta_count ? beta_sum / static_cast<double>(beta_count) : std::numeric_limits<double>::quiet_NaN();
}

void BlockStats::merge(const BlockStats& o) {
  inner_iters += o.inner_iters;
  sampled_rows += o.sampled_rows;
  skipped_rows += o.skipped_rows;
  fallback_rows += o.fallback_rows;
  beta_sum += o.beta_sum;
  beta_count += o.beta_count;
}

namespace {

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

bool needs_sampler(const AlsPlan& plan) {
  if (plan.strategy == InnerStrategy::approx)
    return plan.richardson.epsilon_hat > 0.0 || plan.richardson.epsilon_hat_beta_scale.value_or(0.0) > 0.0;
  if (plan.strategy == InnerStrategy::parafac) return plan.richardson.epsilon_hat > 0.0;
  return false;
}

struct RowOutcome {
  Vector x;
  BlockStats stats;
};

RowOutcome solve_subproblem(const std::shared_ptr<const PreparedOperator>& op, std::vector<std::size_t> omega,
                            Vector q, const Vector& current, const AlsPlan& plan, std::uint64_t seed) {
  RowOutcome out;
  if (omega.empty()) {
    out.x = current;
    out.stats.skipped_rows = 1;
    return out;
  }
  const LiftedProblem prob(op, std::move(omega), std::move(q));
  SketchConfig sketch = plan.sketch;
  sketch.seed = seed;
  try {
    switch (plan.strategy) {
      case InnerStrategy::direct:
        out.x = solve_masked_direct(prob);
        out.stats.inner_iters = 1;
        return out;
      case InnerStrategy::parafac: {
        sketch.epsilon_hat = plan.richardson.epsilon_hat;
        Rng rng(seed);
        out.x = em_one_step(prob, current, sketch, rng);
        out.stats.inner_iters = 1;
        out.stats.sampled_rows = sketch.exact() ? prob.omega().size() : sketch.sample_count(prob.cols(), prob.op().rows());
        return out;
      }
      case InnerStrategy::mini_als:
      case InnerStrategy::accelerated:
      case InnerStrategy::approx: {
        RichardsonConfig cfg = plan.richardson;
        if (plan.strategy != InnerStrategy::approx) {
          cfg.epsilon_hat = 0.0;
          cfg.epsilon_hat_beta_scale.reset();
          cfg.accelerate = plan.strategy == InnerStrategy::accelerated;
        }
        const std::optional<Vector> start = plan.warm_start ? std::optional<Vector>(current) : std::nullopt;
        SolveReport rep = approx_mini_als(prob, cfg, sketch, start);
        out.x = std::move(rep.x);
        out.stats.inner_iters = rep.iterations;
        out.stats.sampled_rows = rep.sampled_rows;
        out.stats.beta_sum = rep.beta;
        out.stats.beta_count = 1;
        return out;
      }
    }
  } catch (const SingularMaskedGramError&) {
    out.x = solve_masked_direct(prob);
    out.stats = {};
    out.stats.inner_iters = 1;
    out.stats.fallback_rows = 1;
    return out;
  }
  return out;
}

}  // namespace

Matrix detail::solve_block_rows(const StructuredOperator& op, const MaskedTensor::Slices& slices,
                                const Matrix& current, const AlsPlan& plan, std::uint64_t seed,
                                BlockStats* stats) {
  const auto prepared = std::make_shared<const PreparedOperator>(op, needs_sampler(plan));
  const std::size_t rows = slices.columns.size();
  Matrix next(current.rows(), current.cols());
  std::vector<BlockStats> row_stats(rows);
  parallel_for(rows, plan.threads, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    RowOutcome r = solve_subproblem(prepared, slices.columns[i], slices.values[i], current.row(ii).transpose(),
                                    plan, derive_seed(seed, i));
    next.row(ii) = r.x.transpose();
    row_stats[i] = r.stats;
  });
  if (stats) {
    for (const auto& s : row_stats) stats->merge(s);
  }
  return next;
}

namespace {

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order) throw DimensionError("block index " + std::to_string(mode) + " out of range");
}

}  // namespace

CPModel cp_factor_update(const MaskedTensor& x, const CPModel& model, std::size_t mode, const AlsPlan& plan,
                         std::uint64_t seed, BlockStats* stats) {
  model.validate();
  check_mode(mode, model.factors.size());
  if (model.shape() != x.shape()) throw DimensionError("CP model shape does not match data");
  std::vector<Matrix> others;
  for (std::size_t k = 0; k < model.factors.size(); ++k)
    if (k != mode) others.push_back(model.factors[k]);
  if (others.empty()) others.push_back(Matrix::Ones(1, static_cast<Eigen::Index>(model.rank())));
  const StructuredOperator op = StructuredOperator::khatri_rao(std::move(others));

  const Matrix current = model.factors[mode] * model.weights.asDiagonal();
  Matrix updated = detail::solve_block_rows(op, x.slices(mode), current, plan, seed, stats);

  CPModel out = model;
  for (Eigen::Index r = 0; r < updated.cols(); ++r) {
    const double norm = updated.col(r).norm();
    out.weights[r] = norm;
    if (norm > 0.0) updated.col(r) /= norm;
  }
  out.factors[mode] = std::move(updated);
  return out;
}

TuckerModel tucker_core_update(const MaskedTensor& x, const TuckerModel& model, const AlsPlan& plan,
                               std::uint64_t seed, BlockStats* stats) {
  model.validate();
  if (model.shape() != x.shape()) throw DimensionError("Tucker model shape does not match data");
  const StructuredOperator op = StructuredOperator::kronecker(model.factors);
  const auto prepared = std::make_shared<const PreparedOperator>(op, needs_sampler(plan));
  std::vector<std::size_t> omega(x.mask().indices().begin(), x.mask().indices().end());
  RowOutcome r = solve_subproblem(prepared, std::move(omega), x.observed(), vectorize(model.core), plan, seed);
  if (stats) stats->merge(r.stats);
  TuckerModel out = model;
  out.core = devectorize(r.x, model.core.shape());
  return out;
}

TuckerModel tucker_factor_update(const MaskedTensor& x, const TuckerModel& model, std::size_t mode,
                                 const AlsPlan& plan, std::uint64_t seed, BlockStats* stats) {
  model.validate();
  check_mode(mode, model.factors.size());
  if (model.shape() != x.shape()) throw DimensionError("Tucker model shape does not match data");
  std::vector<Matrix> others;
  for (std::size_t k = 0; k < model.factors.size(); ++k)
    if (k != mode) others.push_back(model.factors[k]);
  if (others.empty()) others.push_back(Matrix::Ones(1, 1));
  const StructuredOperator op =
      StructuredOperator::kronecker_times_matrix(std::move(others), unfold(model.core, mode).transpose());
  TuckerModel out = model;
  out.factors[mode] = detail::solve_block_rows(op, x.slices(mode), model.factors[mode], plan, seed, stats);
  return out;
}

TTModel tt_core_update(const MaskedTensor& x, const TTModel& model, std::size_t mode, const AlsPlan& plan,
                       std::uint64_t seed, BlockStats* stats) {
  model.validate();
  check_mode(mode, model.cores.size());
  if (model.shape() != x.shape()) throw DimensionError("TT model shape does not match data");
  TTModel out = plan.tt_canonicalize ? tt_canonicalize(model, mode) : model;
  const StructuredOperator op = tt_core_operator(out, mode);
  DenseTensor& core = out.cores[mode];
  const std::size_t r0 = core.dim(0), extent = core.dim(1), r1 = core.dim(2);
  // Row i holds core(:, i, :) flattened row-major.
  Matrix current(static_cast<Eigen::Index>(extent), static_cast<Eigen::Index>(r0 * r1));
  for (std::size_t a = 0; a < r0; ++a)
    for (std::size_t i = 0; i < extent; ++i)
      for (std::size_t b = 0; b < r1; ++b)
        current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a * r1 + b)) = core[(a * extent + i) * r1 + b];
  const Matrix next = detail::solve_block_rows(op, x.slices(mode), current, plan, seed, stats);
  for (std::size_t a = 0; a < r0; ++a)
    for (std::size_t i = 0; i < extent; ++i)
      for (std::size_t b = 0; b < r1; ++b)
        core[(a * extent + i) * r1 + b] = next(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a * r1 + b));
  return out;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Fill row-major so the stream order matches the DTF1 layout.
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform01(rng);
  return m;
}

DenseTensor uniform_tensor(const Shape& shape, Rng& rng) {
  DenseTensor t(shape);
  for (auto& v : t.data()) v = uniform01(rng);
  return t;
}

}  // namespace

Model initialize_model(const MaskedTensor& x, const AlsPlan& plan) {
  const Shape& shape = x.shape();
  plan.validate(shape);
  Rng rng(derive_seed(plan.seed, 0x1417));
  switch (plan.kind) {
    case ModelKind::cp: {
      CPModel m;
      m.weights = Vector::Ones(static_cast<Eigen::Index>(plan.ranks[0]));
      for (auto d : shape) m.factors.push_back(uniform_matrix(d, plan.ranks[0], rng));
      m.normalize();
      return m;
    }
    case ModelKind::tucker: {
      TuckerModel m;
      if (plan.init == InitPolicy::hosvd) {
        DenseTensor imputed(shape);
        for (auto l : x.mask().indices()) imputed[l] = x.values()[l];
        DenseTensor core = imputed;
        for (std::size_t n = 0; n < shape.size(); ++n) {
          const Eigen::JacobiSVD<Matrix> svd(unfold(imputed, n), Eigen::ComputeThinU);
          Matrix f = uniform_matrix(shape[n], plan.ranks[n], rng);
          const Eigen::Index k = std::min<Eigen::Index>(svd.matrixU().cols(), f.cols());
          f.leftCols(k) = svd.matrixU().leftCols(k);
          core = mode_product(core, f.transpose(), n);
          m.factors.push_back(std::move(f));
        }
        m.core = std::move(core);
      } else {
        for (std::size_t n = 0; n < shape.size(); ++n) m.factors.push_back(uniform_matrix(shape[n], plan.ranks[n], rng));
        m.core = uniform_tensor(Shape(plan.ranks.begin(), plan.ranks.end()), rng);
      }
      return m;
    }
    case ModelKind::tt: {
      TTModel m;
      for (std::size_t n = 0; n < shape.size(); ++n) {
        const std::size_t left = n == 0 ? 1 : plan.ranks[n - 1];
        const std::size_t right = n + 1 == shape.size() ? 1 : plan.ranks[n];
        m.cores.push_back(uniform_tensor({left, shape[n], right}, rng));
      }
      return m;
    }
  }
  throw std::invalid_argument("unknown model kind");
}

CompletionResult run_completion(const MaskedTensor& x, const AlsPlan& plan, const DenseTensor* ground_truth) {
  plan.validate(x.shape());
  if (x.mask().empty()) throw std::invalid_argument("observation mask is empty");
  if (ground_truth && ground_truth->shape() != x.shape()) throw DimensionError("ground truth shape mismatch");
  CompletionResult result{initialize_model(x, plan), {}};
  const std::size_t order = x.shape().size();

  auto record = [&](std::size_t round, std::string block, const BlockStats& stats,
                    std::chrono::steady_clock::time_point t0) {
    FitRecord rec;
    rec.round = round;
    rec.block = std::move(block);
    rec.stats = stats;
    const DenseTensor estimate = reconstruct(result.model);
    rec.train_rre = rre(estimate, x.values(), &x.mask()).value_or(0.0);
    if (ground_truth) rec.test_rre = rre(estimate, *ground_truth).value_or(0.0);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.trace.records.push_back(std::move(rec));
  };

  for (std::size_t round = 1; round <= plan.rounds; ++round) {
    std::size_t block_id = 0;
    auto block_seed = [&] { return derive_seed(plan.seed, round, block_id++); };
    switch (plan.kind) {
      case ModelKind::cp:
        for (std::size_t n = 0; n < order; ++n) {
          const auto t0 = std::chrono::steady_clock::now();
          BlockStats stats;
          result.model = cp_factor_update(x, std::get<CPModel>(result.model), n, plan, block_seed(), &stats);
          record(round, "A" + std::to_string(n + 1), stats, t0);
        }
        break;
      case ModelKind::tucker: {
        const auto t0 = std::chrono::steady_clock::now();
        BlockStats stats;
        result.model = tucker_core_update(x, std::get<TuckerModel>(result.model), plan, block_seed(), &stats);
        record(round, "core", stats, t0);
        for (std::size_t n = 0; n < order; ++n) {
          const auto t1 = std::chrono::steady_clock::now();
          BlockStats fs;
          result.model = tucker_factor_update(x, std::get<TuckerModel>(result.model), n, plan, block_seed(), &fs);
          record(round, "A" + std::to_string(n + 1), fs, t1);
        }
        break;
      }
      case ModelKind::tt:
        for (std::size_t n = 0; n < order; ++n) {
          const auto t0 = std::chrono::steady_clock::now();
          BlockStats stats;
          result.model = tt_core_update(x, std::get<TTModel>(result.model), n, plan, block_seed(), &stats);
          record(round, "G" + std::to_string(n + 1), stats, t0);
        }
        break;
    }
  }
  return result;
}

}  // namespace tensor_lift
