// tensor_lift: synthetic data, masking, completion and coupled-matrix runs.
//
// Exit codes: 0 ok, 2 bad arguments, 3 I/O failure, 4 solver failure.

#include <CLI11.hpp>

#include "tensor_lift/experiment.hpp"
#include "tensor_lift/io.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tensor_lift;

namespace {

constexpr int kBadArgs = 2;
constexpr int kIoError = 3;
constexpr int kSolverError = 4;

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw std::invalid_argument("cannot parse list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

Shape parse_shape(const std::string& text) {
  Shape s;
  for (long v : parse_list<long>(text)) {
    if (v <= 0) throw std::invalid_argument("list entries must be positive: '" + text + "'");
    s.push_back(static_cast<std::size_t>(v));
  }
  return s;
}

// Flags shared by complete, coupled and bench.
struct SolverFlags {
  std::string model = "cp";
  std::string rank;
  std::string strategy = "direct";
  double epsilon = 1e-6;
  std::optional<double> epsilon_hat;
  std::optional<double> epsilon_hat_scale;
  double delta = 0.1;
  double oversample = 10.0;
  std::optional<std::size_t> samples;
  std::optional<double> sample_rate;
  std::size_t rounds = 10;
  std::uint64_t seed = 0;
  std::string beta = "auto";
  bool accelerate = false;
  bool warm_start = false;
  bool timing = false;

  void attach(CLI::App* app, bool with_model) {
    if (with_model) {
      app->add_option("--model", model, "Model family")->check(CLI::IsMember({"cp", "tucker", "tt"}));
      app->add_option("--rank", rank, "Ranks, comma separated (cp: R; tucker: R1,..,RN; tt: R1,..,R{N-1})")
          ->required();
    }
    app->add_option("--strategy", strategy, "Inner solver")
        ->check(CLI::IsMember({"direct", "parafac", "mini-als", "accel", "approx"}));
    app->add_option("--epsilon", epsilon, "Reducible-error budget in (0,1)");
    app->add_option("--epsilon-hat", epsilon_hat, "Inner least-squares accuracy in [0, 1/beta^2)");
    app->add_option("--epsilon-hat-scale", epsilon_hat_scale,
                    "Set epsilon-hat to this value divided by beta^2 (approx; default 0.25)");
    app->add_option("--delta", delta, "Sketch failure probability");
    app->add_option("--oversample-c", oversample, "Sketch oversampling constant");
    app->add_option("--samples", samples, "Fixed number of sampled rows per inner iteration");
    app->add_option("--sample-rate", sample_rate, "Fraction of rows sampled per inner iteration (coupled)");
    app->add_option("--rounds", rounds, "Outer ALS rounds")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--beta", beta, "beta policy: auto, exact, heuristic or a number >= 1");
    app->add_flag("--accelerate", accelerate, "Adaptive extrapolation for the approx strategy");
    app->add_flag("--warm-start", warm_start, "Start inner solves from the current block value");
    app->add_flag("--timing", timing, "Record wall-clock times (output is then not reproducible)");
  }

  experiment::RunSpec spec() const {
    experiment::RunSpec s;
    s.kind = parse_model_kind(model);
    if (!rank.empty()) s.ranks = parse_shape(rank);
    s.strategy = parse_strategy(strategy);
    s.epsilon = epsilon;
    s.epsilon_hat = epsilon_hat.value_or(0.0);
    s.epsilon_hat_scale = epsilon_hat_scale;
    if (s.strategy == InnerStrategy::approx && !epsilon_hat && !epsilon_hat_scale) s.epsilon_hat_scale = 0.25;
    s.delta = delta;
    s.oversample = oversample;
    s.samples = samples;
    s.sample_rate = sample_rate;
    s.beta = BetaPolicy::parse(beta);
    s.rounds = rounds;
    s.seed = seed;
    s.accelerate = accelerate;
    s.warm_start = warm_start;
    s.timing = timing;
    s.threads = experiment::thread_cap_from_env();
    return s;
  }
};

// Writes to `out`, or stdout when empty.
template <typename F>
void emit(const std::string& out, F&& write) {
  if (out.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + out + " for writing");
  write(os);
  os.flush();
  if (!os) throw IoError("write failed for " + out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor completion by lifted, preconditioned Richardson iteration"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic tensor (or coupled instance) and its planted model");
  std::string gen_kind = "random-cp";
  std::string gen_shape;
  std::string gen_rank;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  std::size_t coupled_n = 200, coupled_d = 5;
  gen->add_option("kind", gen_kind, "random-cp, random-tucker, random-tt or coupled")
      ->check(CLI::IsMember({"random-cp", "random-tucker", "random-tt", "coupled"}));
  gen->add_option("--shape", gen_shape, "Tensor shape, comma separated");
  gen->add_option("--rank", gen_rank, "Planted ranks, comma separated");
  gen->add_option("--n", coupled_n, "Coupled: E is n x n");
  gen->add_option("--d", coupled_d, "Coupled: X, Y are d x d");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // mask
  auto* msk = app.add_subcommand("mask", "Reveal a random fraction of a tensor's entries");
  std::string mask_input, mask_out;
  double mask_p = 0.1;
  std::uint64_t mask_seed = 0;
  msk->add_option("--input", mask_input, "DTF1 tensor")->required();
  msk->add_option("--p", mask_p, "Observed fraction in (0,1]");
  msk->add_option("--seed", mask_seed, "Random seed");
  msk->add_option("--out", mask_out, "Output MSK1 file")->required();

  // complete
  auto* cmp = app.add_subcommand("complete", "Run ALS completion and emit a per-block CSV trace");
  std::string cmp_input, cmp_mask, cmp_out, cmp_model_out;
  SolverFlags cmp_flags;
  cmp->add_option("--input", cmp_input, "DTF1 tensor (also the reference for test RRE)")->required();
  cmp->add_option("--mask", cmp_mask, "MSK1 mask of revealed entries")->required();
  cmp->add_option("--out", cmp_out, "CSV output (stdout if omitted)");
  cmp->add_option("--model-out", cmp_model_out, "Write the fitted model (MDL1)");
  cmp_flags.attach(cmp, true);

  // coupled
  auto* cpl = app.add_subcommand("coupled", "Alternating minimisation for A X B^T + C Y D^T = E");
  std::string cpl_input, cpl_mask, cpl_out;
  SolverFlags cpl_flags;
  cpl->add_option("--input", cpl_input, "Directory holding A, B, C, D, E (.dtf)")->required();
  cpl->add_option("--mask", cpl_mask, "MSK1 mask over E")->required();
  cpl->add_option("--out", cpl_out, "CSV output (stdout if omitted)");
  cpl_flags.rounds = 30;
  cpl_flags.attach(cpl, false);

  // bench
  auto* bch = app.add_subcommand("bench", "Grid over strategies and observation rates");
  std::string bch_input, bch_out, bch_kind = "random-cp", bch_shape, bch_gen_rank;
  std::string bch_strategies = "direct,parafac,mini-als,accel,approx", bch_rates = "0.05,0.1,0.2,0.4";
  SolverFlags bch_flags;
  bch->add_option("--input", bch_input, "DTF1 tensor; synthetic data is generated when omitted");
  bch->add_option("--generate", bch_kind, "Synthetic generator")
      ->check(CLI::IsMember({"random-cp", "random-tucker", "random-tt"}));
  bch->add_option("--shape", bch_shape, "Synthetic tensor shape");
  bch->add_option("--gen-rank", bch_gen_rank, "Synthetic planted ranks (defaults to --rank)");
  bch->add_option("--strategies", bch_strategies, "Comma separated strategies");
  bch->add_option("--p", bch_rates, "Comma separated observation rates");
  bch->add_option("--out", bch_out, "CSV output (stdout if omitted)");
  bch_flags.attach(bch, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadArgs;
  }

  try {
    if (*gen) {
      fs::create_directories(gen_out);
      const auto kind = experiment::parse_generator(gen_kind);
      if (kind == experiment::GeneratorKind::coupled) {
        const auto c = experiment::generate_coupled(coupled_n, coupled_d, gen_seed);
        const fs::path dir(gen_out);
        io::write_matrix(dir / "A.dtf", c.A);
        io::write_matrix(dir / "B.dtf", c.B);
        io::write_matrix(dir / "C.dtf", c.C);
        io::write_matrix(dir / "D.dtf", c.D);
        io::write_matrix(dir / "E.dtf", c.E);
        io::write_matrix(dir / "X.dtf", c.X);
        io::write_matrix(dir / "Y.dtf", c.Y);
      } else {
        if (gen_shape.empty() || gen_rank.empty()) throw std::invalid_argument("--shape and --rank are required");
        const auto data = experiment::generate_tensor(kind, parse_shape(gen_shape), parse_shape(gen_rank), gen_seed);
        io::write_tensor(fs::path(gen_out) / "tensor.dtf", data.tensor);
        io::write_model(fs::path(gen_out) / "model.mdl", data.model);
      }
    } else if (*msk) {
      const DenseTensor t = io::read_tensor(mask_input);
      io::write_mask(mask_out, experiment::random_mask(t.shape(), mask_p, mask_seed));
    } else if (*cmp) {
      const DenseTensor t = io::read_tensor(cmp_input);
      const ObservationMask m = io::read_mask(cmp_mask);
      const auto spec = cmp_flags.spec();
      CompletionResult result;
      emit(cmp_out, [&](std::ostream& os) { experiment::write_completion_csv(os, t, m, spec, &result); });
      if (!cmp_model_out.empty()) io::write_model(cmp_model_out, result.model);
    } else if (*cpl) {
      const fs::path dir(cpl_input);
      const auto inst = CoupledInstance::make(io::read_matrix(dir / "A.dtf"), io::read_matrix(dir / "B.dtf"),
                                              io::read_matrix(dir / "C.dtf"), io::read_matrix(dir / "D.dtf"),
                                              io::read_matrix(dir / "E.dtf"), io::read_mask(cpl_mask));
      const auto spec = cpl_flags.spec();
      emit(cpl_out, [&](std::ostream& os) { experiment::write_coupled_csv(os, inst, spec); });
    } else if (*bch) {
      experiment::BenchGrid grid;
      grid.base = bch_flags.spec();
      for (const auto& s : parse_list<std::string>(bch_strategies)) grid.strategies.push_back(parse_strategy(s));
      grid.rates = parse_list<double>(bch_rates);
      grid.workers = experiment::thread_cap_from_env();
      grid.base.threads = 1;
      if (!bch_input.empty()) {
        grid.input = io::read_tensor(bch_input);
      } else {
        if (bch_shape.empty()) throw std::invalid_argument("bench needs --input or --shape");
        grid.generator = experiment::parse_generator(bch_kind);
        grid.shape = parse_shape(bch_shape);
        grid.generator_ranks = bch_gen_rank.empty() ? grid.base.ranks : parse_shape(bch_gen_rank);
      }
      emit(bch_out, [&](std::ostream& os) { experiment::write_bench_csv(os, grid); });
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  }
  return 0;
}
