#include "tensor_lift/experiment.hpp"

#include "tensor_lift/random.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <atomic>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace tensor_lift::experiment {

GeneratorKind parse_generator(const std::string& text) {
  if (text == "random-cp") return GeneratorKind::random_cp;
  if (text == "random-tucker") return GeneratorKind::random_tucker;
  if (text == "random-tt") return GeneratorKind::random_tt;
  if (text == "coupled") return GeneratorKind::coupled;
  throw std::invalid_argument("unknown generator '" + text + "'");
}

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::random_cp: return "random-cp";
    case GeneratorKind::random_tucker: return "random-tucker";
    case GeneratorKind::random_tt: return "random-tt";
    case GeneratorKind::coupled: return "coupled";
  }
  return "?";
}

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform01(rng);
  return m;
}

DenseTensor uniform_tensor(const Shape& shape, Rng& rng) {
  DenseTensor t(shape);
  for (auto& v : t.data()) v = uniform01(rng);
  return t;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string join_ranks(const Shape& ranks) {
  std::string s;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(ranks[i]);
  }
  return s;
}

double effective_epsilon_hat(const RunSpec& spec, double beta) {
  if (spec.strategy != InnerStrategy::approx) return spec.strategy == InnerStrategy::parafac ? spec.epsilon_hat : 0.0;
  if (spec.epsilon_hat_scale) return std::isnan(beta) ? std::nan("") : *spec.epsilon_hat_scale / (beta * beta);
  return spec.epsilon_hat;
}

}  // namespace

SyntheticTensor generate_tensor(GeneratorKind kind, const Shape& shape, const Shape& ranks, std::uint64_t seed) {
  validate_shape(shape);
  Rng rng(seed);
  auto need = [&](std::size_t count) {
    if (ranks.size() != count) throw std::invalid_argument("generator needs " + std::to_string(count) + " rank value(s)");
    for (auto r : ranks)
      if (r == 0) throw std::invalid_argument("ranks must be positive");
  };
  SyntheticTensor out;
  switch (kind) {
    case GeneratorKind::random_cp: {
      need(1);
      CPModel m;
      m.weights = Vector::Ones(static_cast<Eigen::Index>(ranks[0]));
      for (auto d : shape) m.factors.push_back(uniform_matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(ranks[0]), rng));
      out.model = m;
      break;
    }
    case GeneratorKind::random_tucker: {
      need(shape.size());
      TuckerModel m;
      m.core = uniform_tensor(ranks, rng);
      for (std::size_t n = 0; n < shape.size(); ++n)
        m.factors.push_back(uniform_matrix(static_cast<Eigen::Index>(shape[n]), static_cast<Eigen::Index>(ranks[n]), rng));
      out.model = m;
      break;
    }
    case GeneratorKind::random_tt: {
      need(shape.size() - 1);
      TTModel m;
      for (std::size_t n = 0; n < shape.size(); ++n) {
        const std::size_t left = n == 0 ? 1 : ranks[n - 1];
        const std::size_t right = n + 1 == shape.size() ? 1 : ranks[n];
        m.cores.push_back(uniform_tensor({left, shape[n], right}, rng));
      }
      out.model = m;
      break;
    }
    case GeneratorKind::coupled:
      throw std::invalid_argument("use generate_coupled for the coupled generator");
  }
  out.tensor = reconstruct(out.model);
  return out;
}

CoupledData generate_coupled(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("coupled generator needs n, d > 0");
  Rng rng(seed);
  const auto N = static_cast<Eigen::Index>(n), D = static_cast<Eigen::Index>(d);
  CoupledData c;
  c.A = uniform_matrix(N, D, rng);
  c.B = uniform_matrix(N, D, rng);
  c.C = uniform_matrix(N, D, rng);
  c.D = uniform_matrix(N, D, rng);
  c.X = uniform_matrix(D, D, rng);
  c.Y = uniform_matrix(D, D, rng);
  c.E = c.A * c.X * c.B.transpose() + c.C * c.Y * c.D.transpose();
  return c;
}

ObservationMask random_mask(const Shape& shape, double p, std::uint64_t seed) {
  validate_shape(shape);
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("mask rate p must lie in (0,1]");
  const std::size_t total = element_count(shape);
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(p * static_cast<double>(total))), 1, total);
  // Partial Fisher-Yates shuffle of [0, total).
  std::vector<std::uint64_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::uint64_t{0});
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(uniform_index(rng, total - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(count);
  return ObservationMask(shape, std::move(pool));
}

RichardsonConfig RunSpec::richardson() const {
  RichardsonConfig cfg;
  cfg.epsilon = epsilon;
  cfg.epsilon_hat = epsilon_hat;
  cfg.epsilon_hat_beta_scale = epsilon_hat_scale;
  cfg.beta = beta;
  cfg.accelerate = accelerate;
  return cfg;
}

SketchConfig RunSpec::sketch() const {
  SketchConfig s;
  s.delta = delta;
  s.oversample = oversample;
  s.samples = samples;
  s.seed = seed;
  return s;
}

AlsPlan RunSpec::plan() const {
  AlsPlan p;
  p.kind = kind;
  p.ranks = ranks;
  p.strategy = strategy;
  p.rounds = rounds;
  p.richardson = richardson();
  p.sketch = sketch();
  p.seed = seed;
  p.warm_start = warm_start;
  p.threads = threads;
  return p;
}

void write_completion_csv(std::ostream& os, const DenseTensor& truth, const ObservationMask& mask,
                          const RunSpec& spec, CompletionResult* result) {
  AlsPlan plan = spec.plan();
  if (spec.sample_rate) {
    throw std::invalid_argument("--sample-rate applies to the coupled problem only; use --samples");
  }
  const MaskedTensor data(truth, mask);
  CompletionResult res = run_completion(data, plan, &truth);
  os << kCompletionHeader << '\n';
  for (const auto& r : res.trace.records) {
    const double beta = r.stats.mean_beta();
    os << r.round << ',' << r.block << ',' << to_string(spec.strategy) << ',' << fmt(spec.epsilon) << ','
       << fmt(effective_epsilon_hat(spec, beta)) << ',' << fmt(mask.fraction()) << ',' << join_ranks(spec.ranks)
       << ',' << fmt(r.train_rre) << ',' << fmt(r.test_rre.value_or(0.0)) << ','
       << fmt(spec.timing ? r.wall_ms : 0.0) << ',' << r.stats.inner_iters << ',' << fmt(beta) << '\n';
  }
  if (result) *result = std::move(res);
}

void write_coupled_csv(std::ostream& os, const CoupledInstance& inst, const RunSpec& spec, CoupledResult* result) {
  CoupledConfig cfg;
  cfg.strategy = spec.strategy;
  cfg.richardson = spec.richardson();
  cfg.sketch = spec.sketch();
  cfg.sample_rate = spec.sample_rate;
  cfg.seed = spec.seed;
  cfg.warm_start = spec.warm_start;
  cfg.threads = spec.threads;
  CoupledResult res = coupled_solve(inst, spec.rounds, cfg);
  os << kCoupledHeader << '\n';
  for (const auto& r : res.trace) {
    const double beta = r.stats.mean_beta();
    os << r.round << ',' << to_string(r.which) << ',' << to_string(spec.strategy) << ',' << fmt(spec.epsilon) << ','
       << fmt(effective_epsilon_hat(spec, beta)) << ',' << fmt(inst.mask.fraction()) << ',' << inst.X.rows() << ','
       << fmt(r.mse_train) << ',' << fmt(r.mse_full) << ',' << fmt(spec.timing ? r.wall_ms : 0.0) << ','
       << r.stats.inner_iters << ',' << fmt(beta) << '\n';
  }
  if (result) *result = std::move(res);
}

void write_bench_csv(std::ostream& os, const BenchGrid& grid) {
  if (grid.strategies.empty() || grid.rates.empty()) throw std::invalid_argument("bench needs strategies and rates");
  DenseTensor data;
  if (grid.input) {
    data = *grid.input;
  } else {
    data = generate_tensor(grid.generator, grid.shape, grid.generator_ranks, derive_seed(grid.base.seed, 1)).tensor;
  }

  struct Job {
    std::size_t rate_index;
    InnerStrategy strategy;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < grid.rates.size(); ++r)
    for (auto s : grid.strategies) jobs.push_back({r, s});
  std::vector<ObservationMask> masks;
  for (std::size_t r = 0; r < grid.rates.size(); ++r)
    masks.push_back(random_mask(data.shape(), grid.rates[r], derive_seed(grid.base.seed, 2, r)));

  std::vector<std::string> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        RunSpec spec = grid.base;
        spec.strategy = jobs[j].strategy;
        // The solver seed is per p so strategies at equal p share the initial model.
        spec.seed = grid.base.seed ^ jobs[j].rate_index;
        const ObservationMask& mask = masks[jobs[j].rate_index];
        CompletionResult res = run_completion(MaskedTensor(data, mask), spec.plan(), &data);
        double wall = 0.0, beta_sum = 0.0;
        std::size_t iters = 0, beta_count = 0;
        for (const auto& rec : res.trace.records) {
          wall += rec.wall_ms;
          iters += rec.stats.inner_iters;
          beta_sum += rec.stats.beta_sum;
          beta_count += rec.stats.beta_count;
        }
        const double beta = beta_count ? beta_sum / static_cast<double>(beta_count) : std::nan("");
        const auto& last = res.trace.records.back();
        std::ostringstream line;
        line << to_string(spec.strategy) << ',' << fmt(mask.fraction()) << ',' << join_ranks(spec.ranks) << ','
             << fmt(spec.epsilon) << ',' << fmt(effective_epsilon_hat(spec, beta)) << ',' << spec.rounds << ','
             << fmt(last.train_rre) << ',' << fmt(last.test_rre.value_or(0.0)) << ','
             << fmt(spec.timing ? wall : 0.0) << ',' << iters << ',' << fmt(beta) << '\n';
        rows[j] = line.str();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(grid.workers, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  os << kBenchHeader << '\n';
  for (const auto& r : rows) os << r;
}

std::size_t thread_cap_from_env() {
  const char* v = std::getenv("TENSOR_LIFT_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<std::size_t>(n);
}

}  // namespace tensor_lift::experiment
