#include <gtest/gtest.h>

#include <functional>

#include "test_util.hpp"
#include "tensor_lift/completion.hpp"
#include "tensor_lift/experiment.hpp"
#include "tensor_lift/leverage.hpp"

using namespace tensor_lift;
using testutil::random_matrix;

namespace {

// Design of a block: column k is the reconstruction with only parameter k set
// to one. Valid because every model is linear in each of its blocks.
Matrix block_design(std::size_t params, const std::function<DenseTensor(const Vector&)>& build) {
  Matrix d;
  for (std::size_t k = 0; k < params; ++k) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(params));
    e(static_cast<Eigen::Index>(k)) = 1.0;
    const Vector col = vectorize(build(e));
    if (d.size() == 0) d.resize(col.size(), static_cast<Eigen::Index>(params));
    d.col(static_cast<Eigen::Index>(k)) = col;
  }
  return d;
}

// Best reconstruction reachable by refitting the block on `mask`, under
// minimum-norm parameters.
Vector oracle_fit(const Matrix& design, const DenseTensor& x, const ObservationMask& mask) {
  std::vector<std::size_t> rows(mask.indices().begin(), mask.indices().end());
  const Vector q = mask.gather(x);
  return design * testutil::lstsq(testutil::select_rows(design, rows), q);
}

Matrix params_to_matrix(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

CPModel random_cp(std::mt19937_64& gen, const Shape& shape, std::size_t rank) {
  CPModel m;
  m.weights = Vector::Ones(static_cast<Eigen::Index>(rank));
  for (auto d : shape) m.factors.push_back(random_matrix(gen, d, rank));
  m.normalize();
  return m;
}

TuckerModel random_tucker(std::mt19937_64& gen, const Shape& shape, const Shape& ranks) {
  TuckerModel m;
  m.core = testutil::random_tensor(gen, ranks);
  for (std::size_t n = 0; n < shape.size(); ++n) m.factors.push_back(random_matrix(gen, shape[n], ranks[n]));
  return m;
}

TTModel random_tt(std::mt19937_64& gen, const Shape& shape, const Shape& ranks) {
  TTModel m;
  for (std::size_t n = 0; n < shape.size(); ++n) {
    const std::size_t l = n == 0 ? 1 : ranks[n - 1];
    const std::size_t r = n + 1 == shape.size() ? 1 : ranks[n];
    m.cores.push_back(testutil::random_tensor(gen, {l, shape[n], r}));
  }
  return m;
}

AlsPlan plan_for(ModelKind kind, Shape ranks, InnerStrategy s = InnerStrategy::direct) {
  AlsPlan p;
  p.kind = kind;
  p.ranks = std::move(ranks);
  p.strategy = s;
  p.richardson.beta = BetaPolicy::exact();
  return p;
}

double rel_tensor(const DenseTensor& a, const Vector& b) { return testutil::rel(vectorize(a), b); }

}  // namespace

TEST(Strategy, ParseAndPrint) {
  EXPECT_EQ(parse_strategy("direct"), InnerStrategy::direct);
  EXPECT_EQ(parse_strategy("accel"), InnerStrategy::accelerated);
  EXPECT_EQ(parse_strategy("accelerated"), InnerStrategy::accelerated);
  EXPECT_EQ(parse_strategy("mini-als"), InnerStrategy::mini_als);
  EXPECT_STREQ(to_string(InnerStrategy::approx), "approx");
  EXPECT_THROW(parse_strategy("cg"), std::invalid_argument);
}

TEST(MaskedTensor, SlicesGroupObservationsByModeIndex) {
  std::mt19937_64 gen(1);
  const DenseTensor t = testutil::random_tensor(gen, {2, 3, 2});
  const ObservationMask m(t.shape(), {0, 5, 7, 11});
  const MaskedTensor x(t, m);
  const auto& s1 = x.slices(1);
  ASSERT_EQ(s1.columns.size(), 3u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    total += s1.columns[i].size();
    for (std::size_t k = 0; k < s1.columns[i].size(); ++k) {
      const std::size_t c = s1.columns[i][k];
      const MultiIndex idx{c / 2, i, c % 2};
      EXPECT_EQ(s1.values[i](static_cast<Eigen::Index>(k)), t.at(idx));
      EXPECT_TRUE(m.contains(linear_index(t.shape(), idx)));
    }
  }
  EXPECT_EQ(total, 4u);
}

TEST(CpUpdate, FullObservationEqualsClassicalAls) {
  std::mt19937_64 gen(2);
  const Shape shape{5, 4, 6};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const CPModel m = random_cp(gen, shape, 3);
  const MaskedTensor mx(x, ObservationMask::full(shape));
  for (std::size_t n = 0; n < 3; ++n) {
    const CPModel out = cp_factor_update(mx, m, n, plan_for(ModelKind::cp, {3}), 0);
    std::vector<Matrix> others;
    for (std::size_t k = 0; k < 3; ++k)
      if (k != n) others.push_back(m.factors[k]);
    const Matrix kr = testutil::khatri_rao(others[0], others[1]);
    const Matrix had = (others[0].transpose() * others[0]).cwiseProduct(others[1].transpose() * others[1]);
    const Matrix classical = unfold(x, n) * kr * had.inverse();
    const Matrix got = out.factors[n] * out.weights.asDiagonal();
    EXPECT_LE((got - classical).norm(), 1e-10 * classical.norm());
  }
}

TEST(CpUpdate, MaskedMatchesBlockOracleAndStaysNormalized) {
  std::mt19937_64 gen(3);
  const Shape shape{6, 5, 4};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const ObservationMask mask = experiment::random_mask(shape, 0.5, 3);
  const CPModel m = random_cp(gen, shape, 2);
  for (std::size_t n = 0; n < 3; ++n) {
    const CPModel out = cp_factor_update(MaskedTensor(x, mask), m, n, plan_for(ModelKind::cp, {2}), 0);
    const Matrix d = block_design(shape[n] * 2, [&](const Vector& v) {
      CPModel b = m;
      b.weights = Vector::Ones(2);
      b.factors[n] = params_to_matrix(v, static_cast<Eigen::Index>(shape[n]), 2);
      return reconstruct(b);
    });
    EXPECT_LE(rel_tensor(reconstruct(out), oracle_fit(d, x, mask)), 1e-10);
    for (const auto& f : out.factors)
      for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(f.col(r).norm(), 1.0, 1e-12);
  }
}

TEST(CpUpdate, ExactRankFromTruthInOtherModesRecoversInOneRound) {
  std::mt19937_64 gen(4);
  const Shape shape{20, 20, 20};
  const auto truth = experiment::generate_tensor(experiment::GeneratorKind::random_cp, shape, {3}, 4);
  CPModel m = std::get<CPModel>(truth.model);
  m.normalize();
  m.factors[0] = random_matrix(gen, 20, 3);
  const MaskedTensor mx(truth.tensor, ObservationMask::full(shape));
  for (std::size_t n = 0; n < 3; ++n) m = cp_factor_update(mx, m, n, plan_for(ModelKind::cp, {3}), 0);
  EXPECT_LE(*rre(reconstruct(m), truth.tensor), 1e-8);
}

TEST(CpUpdate, MiniAlsRowsAgreeWithDirect) {
  std::mt19937_64 gen(5);
  const Shape shape{10, 10, 10};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const ObservationMask mask = experiment::random_mask(shape, 0.3, 5);
  const MaskedTensor mx(x, mask);
  const CPModel m = random_cp(gen, shape, 3);
  AlsPlan mini = plan_for(ModelKind::cp, {3}, InnerStrategy::mini_als);
  mini.richardson.epsilon = 1e-6;
  const CPModel a = cp_factor_update(mx, m, 0, plan_for(ModelKind::cp, {3}), 0);
  const CPModel b = cp_factor_update(mx, m, 0, mini, 0);
  const Matrix fa = a.factors[0] * a.weights.asDiagonal();
  const Matrix fb = b.factors[0] * b.weights.asDiagonal();
  for (Eigen::Index i = 0; i < fa.rows(); ++i)
    EXPECT_LE((fa.row(i) - fb.row(i)).norm(), 1e-4 * fa.row(i).norm()) << "row " << i;
}

TEST(CpUpdate, EmptySliceKeepsRowAndIsFlagged) {
  std::mt19937_64 gen(6);
  const Shape shape{3, 4, 4};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  std::vector<std::uint64_t> idx;
  for (std::uint64_t l = 0; l < 48; ++l)
    if (l / 16 != 1) idx.push_back(l);  // nothing observed with i_0 = 1
  const ObservationMask mask(shape, idx);
  const CPModel m = random_cp(gen, shape, 2);
  BlockStats stats;
  const CPModel out = cp_factor_update(MaskedTensor(x, mask), m, 0, plan_for(ModelKind::cp, {2}), 0, &stats);
  EXPECT_EQ(stats.skipped_rows, 1u);
  const Matrix before = m.factors[0] * m.weights.asDiagonal();
  const Matrix after = out.factors[0] * out.weights.asDiagonal();
  EXPECT_LE((before.row(1) - after.row(1)).norm(), 1e-12);
}

TEST(CpUpdate, SingularSliceFallsBackToDirect) {
  std::mt19937_64 gen(7);
  const Shape shape{2, 5, 5};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  std::vector<std::uint64_t> idx;
  for (std::uint64_t l = 0; l < 25; ++l) idx.push_back(l);
  idx.push_back(25);  // row 1 has a single observation for rank 3
  const ObservationMask mask(shape, idx);
  const CPModel m = random_cp(gen, shape, 3);
  BlockStats stats;
  AlsPlan p = plan_for(ModelKind::cp, {3}, InnerStrategy::mini_als);
  const CPModel out = cp_factor_update(MaskedTensor(x, mask), m, 0, p, 0, &stats);
  EXPECT_EQ(stats.fallback_rows, 1u);
  const CPModel direct = cp_factor_update(MaskedTensor(x, mask), m, 0, plan_for(ModelKind::cp, {3}), 0);
  EXPECT_LE(testutil::rel(Matrix(out.factors[0] * out.weights.asDiagonal()),
                          Matrix(direct.factors[0] * direct.weights.asDiagonal())),
            1e-4);
}

TEST(CpUpdate, RowOrderDoesNotMatter) {
  std::mt19937_64 gen(8);
  const Shape shape{8, 6, 5};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const ObservationMask mask = experiment::random_mask(shape, 0.4, 8);
  const MaskedTensor mx(x, mask);
  const CPModel m = random_cp(gen, shape, 2);
  const auto op = StructuredOperator::khatri_rao({m.factors[1], m.factors[2]});
  const auto& slices = mx.slices(0);
  const Matrix current = m.factors[0];

  std::vector<std::size_t> perm(8);
  for (std::size_t i = 0; i < 8; ++i) perm[i] = (i * 3 + 1) % 8;
  MaskedTensor::Slices ps;
  Matrix pc(8, 2);
  for (std::size_t k = 0; k < 8; ++k) {
    ps.columns.push_back(slices.columns[perm[k]]);
    ps.values.push_back(slices.values[perm[k]]);
    pc.row(static_cast<Eigen::Index>(k)) = current.row(static_cast<Eigen::Index>(perm[k]));
  }
  for (InnerStrategy s : {InnerStrategy::direct, InnerStrategy::mini_als}) {
    const AlsPlan p = plan_for(ModelKind::cp, {2}, s);
    const Matrix a = detail::solve_block_rows(op, slices, current, p, 0, nullptr);
    const Matrix b = detail::solve_block_rows(op, ps, pc, p, 0, nullptr);
    for (std::size_t k = 0; k < 8; ++k)
      EXPECT_LE((a.row(static_cast<Eigen::Index>(perm[k])) - b.row(static_cast<Eigen::Index>(k))).norm(),
                1e-12 * (1 + a.norm()));
    AlsPlan threaded = p;
    threaded.threads = 3;
    EXPECT_EQ(detail::solve_block_rows(op, slices, current, threaded, 0, nullptr), a);
  }
}

TEST(TuckerUpdate, IdentityFactorsFullMaskGivesDataAsCore) {
  std::mt19937_64 gen(9);
  const Shape shape{3, 4, 2};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  TuckerModel m;
  m.core = DenseTensor(shape);
  for (auto d : shape) m.factors.push_back(Matrix::Identity(d, d));
  const TuckerModel out =
      tucker_core_update(MaskedTensor(x, ObservationMask::full(shape)), m, plan_for(ModelKind::tucker, shape), 0);
  EXPECT_LE(rel_tensor(out.core, vectorize(x)), 1e-12);
}

TEST(TuckerUpdate, CoreMatchesKroneckerRegression) {
  std::mt19937_64 gen(10);
  const Shape shape{5, 4, 6};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const TuckerModel m = random_tucker(gen, shape, {2, 3, 2});
  const TuckerModel out =
      tucker_core_update(MaskedTensor(x, ObservationMask::full(shape)), m, plan_for(ModelKind::tucker, {2, 3, 2}), 0);
  const Matrix k = testutil::kron(testutil::kron(m.factors[0], m.factors[1]), m.factors[2]);
  const Vector g = testutil::lstsq(k, vectorize(x));
  EXPECT_LE(testutil::rel(vectorize(out.core), g), 1e-10);
}

TEST(TuckerUpdate, FactorMatchesBlockOracle) {
  std::mt19937_64 gen(11);
  const Shape shape{5, 4, 6};
  const Shape ranks{2, 3, 2};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const TuckerModel m = random_tucker(gen, shape, ranks);
  for (const double p : {1.0, 0.6}) {
    const ObservationMask mask = p == 1.0 ? ObservationMask::full(shape) : experiment::random_mask(shape, p, 11);
    for (std::size_t n = 0; n < 3; ++n) {
      const TuckerModel out = tucker_factor_update(MaskedTensor(x, mask), m, n, plan_for(ModelKind::tucker, ranks), 0);
      const Matrix d = block_design(shape[n] * ranks[n], [&](const Vector& v) {
        TuckerModel b = m;
        b.factors[n] = params_to_matrix(v, static_cast<Eigen::Index>(shape[n]), static_cast<Eigen::Index>(ranks[n]));
        return reconstruct(b);
      });
      EXPECT_LE(rel_tensor(reconstruct(out), oracle_fit(d, x, mask)), 1e-8) << "p " << p << " mode " << n;
    }
  }
}

TEST(TuckerUpdate, SuperdiagonalCoreReducesToRegressionOnUnfolding) {
  std::mt19937_64 gen(12);
  const std::size_t r = 3;
  const Shape shape{4, r, r};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  TuckerModel m;
  m.core = DenseTensor(Shape{r, r, r});
  for (std::size_t k = 0; k < r; ++k) {
    const MultiIndex i{k, k, k};
    m.core.at(i) = 1.0;
  }
  m.factors = {random_matrix(gen, 4, r), Matrix::Identity(r, r), Matrix::Identity(r, r)};
  const TuckerModel out =
      tucker_factor_update(MaskedTensor(x, ObservationMask::full(shape)), m, 0, plan_for(ModelKind::tucker, {r, r, r}), 0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < r; ++k) {
      const MultiIndex idx{i, k, k};
      EXPECT_NEAR(out.factors[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), x.at(idx), 1e-12);
    }
}

TEST(TuckerUpdate, CoreUpdateViaMiniAlsMeetsResidualBound) {
  const Shape shape{15, 15, 15};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_tucker, shape, {2, 2, 2}, 13);
  std::mt19937_64 gen(13);
  DenseTensor x = gt.tensor;
  for (auto& v : x.data()) v += 0.01 * std::normal_distribution<double>()(gen);
  const ObservationMask mask = experiment::random_mask(shape, 0.3, 13);
  const TuckerModel m = random_tucker(gen, shape, {2, 2, 2});

  const auto prepared = std::make_shared<PreparedOperator>(StructuredOperator::kronecker(m.factors));
  std::vector<std::size_t> omega(mask.indices().begin(), mask.indices().end());
  const LiftedProblem prob(prepared, omega, mask.gather(x));
  RichardsonConfig cfg;
  cfg.epsilon = 1e-4;
  cfg.beta = BetaPolicy::exact();
  const auto rep = approx_mini_als(prob, cfg, {});

  const Matrix p = prob.masked_design();
  const Matrix pi = testutil::projector(p);
  const Vector q = prob.q();
  const double min_res = (q - pi * q).squaredNorm();
  const double r = prob.masked_residual(rep.x);
  EXPECT_LE(r * r, residual_bound_factor(rep.beta, 0.0) * min_res + cfg.epsilon * (pi * q).squaredNorm());
}

TEST(TuckerCompletion, RankExactTestErrorDecreases) {
  const Shape shape{10, 10, 10};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_tucker, shape, {2, 2, 2}, 14);
  const ObservationMask mask = experiment::random_mask(shape, 0.5, 14);
  AlsPlan p = plan_for(ModelKind::tucker, {2, 2, 2});
  p.rounds = 5;
  p.seed = 14;
  const auto res = run_completion(MaskedTensor(gt.tensor, mask), p, &gt.tensor);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& rec : res.trace.records) {
    if (rec.block != "A3") continue;
    EXPECT_LE(*rec.test_rre, prev + 1e-12) << "round " << rec.round;
    prev = *rec.test_rre;
  }
}

TEST(TtCanonicalize, PreservesTensorAndOrthonormalizesInterface) {
  std::mt19937_64 gen(15);
  const Shape shape{6, 6, 6, 6};
  for (int trial = 0; trial < 5; ++trial) {
    const TTModel m = random_tt(gen, shape, {3, 4, 3});
    const Vector before = vectorize(reconstruct(m));
    for (std::size_t n = 0; n < 4; ++n) {
      const TTModel c = tt_canonicalize(m, n);
      EXPECT_LE((vectorize(reconstruct(c)) - before).norm(), 1e-10 * before.norm());
      const StructuredOperator op = tt_core_operator(c, n);
      const Matrix g = op.gram();
      EXPECT_LE((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-8);
      const auto prof = leverage_scores(op);
      EXPECT_NEAR(prof.total, static_cast<double>(c.cores[n].dim(0) * c.cores[n].dim(2)), 1e-8);
      // Again from canonical: Gram is still the identity.
      const Matrix g2 = tt_core_operator(tt_canonicalize(c, n), n).gram();
      EXPECT_LE((g2 - Matrix::Identity(g2.rows(), g2.cols())).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(TtCanonicalize, HandlesRanksAboveModeSize) {
  std::mt19937_64 gen(16);
  const TTModel m = random_tt(gen, {2, 3, 2}, {3, 3});
  const Vector before = vectorize(reconstruct(m));
  const TTModel c = tt_canonicalize(m, 1);
  EXPECT_LE((vectorize(reconstruct(c)) - before).norm(), 1e-10 * before.norm());
}

TEST(TtUpdate, MatchesBlockOracle) {
  std::mt19937_64 gen(17);
  const Shape shape{4, 5, 3, 4};
  const Shape ranks{2, 3, 2};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const TTModel m = random_tt(gen, shape, ranks);
  for (const double p : {1.0, 0.7}) {
    const ObservationMask mask = p == 1.0 ? ObservationMask::full(shape) : experiment::random_mask(shape, p, 17);
    for (bool canon : {true, false}) {
      AlsPlan plan = plan_for(ModelKind::tt, ranks);
      plan.tt_canonicalize = canon;
      for (std::size_t n = 0; n < 4; ++n) {
        const TTModel out = tt_core_update(MaskedTensor(x, mask), m, n, plan, 0);
        const Shape cs = m.cores[n].shape();
        const Matrix d = block_design(element_count(cs), [&](const Vector& v) {
          TTModel b = m;
          b.cores[n] = DenseTensor(cs, std::vector<double>(v.data(), v.data() + v.size()));
          return reconstruct(b);
        });
        EXPECT_LE(rel_tensor(reconstruct(out), oracle_fit(d, x, mask)), 1e-9) << "p " << p << " mode " << n;
      }
    }
  }
}

TEST(TtUpdate, TwoCoresIsAlternatingMatrixLeastSquares) {
  std::mt19937_64 gen(18);
  const Matrix xm = random_matrix(gen, 6, 5);
  const DenseTensor x = DenseTensor::from_matrix(xm);
  const TTModel m = random_tt(gen, {6, 5}, {2});
  AlsPlan plan = plan_for(ModelKind::tt, {2});
  plan.tt_canonicalize = false;
  const TTModel out = tt_core_update(MaskedTensor(x, ObservationMask::full({6, 5})), m, 0, plan, 0);
  // X ~ U V with V (2 x 5) the second core: U = X V^T (V V^T)^-1.
  const Matrix v = params_to_matrix(Vector::Map(m.cores[1].data().data(), 10), 2, 5);
  const Matrix u = xm * v.transpose() * (v * v.transpose()).inverse();
  const Matrix got = params_to_matrix(Vector::Map(out.cores[0].data().data(), 12), 6, 2);
  EXPECT_LE((got - u).norm(), 1e-10 * u.norm());
}

TEST(TtUpdate, RankOneIsMaskedRatio) {
  std::mt19937_64 gen(19);
  const Shape shape{4, 3, 5};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const ObservationMask mask = experiment::random_mask(shape, 0.5, 19);
  const TTModel m = random_tt(gen, shape, {1, 1});
  AlsPlan plan = plan_for(ModelKind::tt, {1, 1});
  plan.tt_canonicalize = false;
  const TTModel out = tt_core_update(MaskedTensor(x, mask), m, 1, plan, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    double num = 0, den = 0;
    for (auto l : mask.indices()) {
      const MultiIndex idx = multi_index(shape, l);
      if (idx[1] != j) continue;
      const double c = m.cores[0][idx[0]] * m.cores[2][idx[2]];
      num += x[l] * c;
      den += c * c;
    }
    EXPECT_NEAR(out.cores[1][j], num / den, 1e-12);
  }
}

TEST(TtCompletion, ExactTrainRecoversInTwoRounds) {
  const Shape shape{6, 6, 6};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_tt, shape, {2, 2}, 20);
  AlsPlan p = plan_for(ModelKind::tt, {2, 2});
  p.rounds = 2;
  p.seed = 20;
  const auto res = run_completion(MaskedTensor(gt.tensor, ObservationMask::full(shape)), p, &gt.tensor);
  EXPECT_LE(res.trace.records.back().train_rre, 1e-8);
}

TEST(Completion, FullObservationUpdatesMatchClassicalForEveryKind) {
  std::mt19937_64 gen(21);
  const Shape shape{4, 5, 3};
  const DenseTensor x = testutil::random_tensor(gen, shape);
  const ObservationMask full = ObservationMask::full(shape);
  const MaskedTensor mx(x, full);
  // Lifting is exact at p = 1, so every strategy reproduces the unmasked update.
  for (InnerStrategy s : {InnerStrategy::mini_als, InnerStrategy::parafac, InnerStrategy::accelerated}) {
    const CPModel m = random_cp(gen, shape, 2);
    const CPModel a = cp_factor_update(mx, m, 1, plan_for(ModelKind::cp, {2}), 0);
    const CPModel b = cp_factor_update(mx, m, 1, plan_for(ModelKind::cp, {2}, s), 0);
    EXPECT_LE(testutil::rel(vectorize(reconstruct(b)), vectorize(reconstruct(a))), 1e-10) << to_string(s);
  }
}

TEST(Completion, DirectTrainErrorNeverIncreases) {
  const Shape shape{8, 7, 6};
  for (auto kind : {ModelKind::cp, ModelKind::tucker, ModelKind::tt}) {
    const auto gen_kind = kind == ModelKind::cp       ? experiment::GeneratorKind::random_cp
                          : kind == ModelKind::tucker ? experiment::GeneratorKind::random_tucker
                                                      : experiment::GeneratorKind::random_tt;
    const Shape ranks = kind == ModelKind::cp ? Shape{3} : kind == ModelKind::tucker ? Shape{2, 2, 2} : Shape{2, 2};
    auto gt = experiment::generate_tensor(gen_kind, shape, ranks, 22);
    std::mt19937_64 gen(22);
    for (auto& v : gt.tensor.data()) v += 0.05 * std::normal_distribution<double>()(gen);
    AlsPlan p = plan_for(kind, ranks);
    p.rounds = 4;
    p.seed = 22;
    const auto res = run_completion(MaskedTensor(gt.tensor, experiment::random_mask(shape, 0.5, 22)), p);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& rec : res.trace.records) {
      EXPECT_LE(rec.train_rre, prev + 1e-12) << to_string(kind) << " " << rec.round << rec.block;
      prev = rec.train_rre;
    }
  }
}

TEST(Completion, TraceHasOneRecordPerBlockInOrder) {
  const Shape shape{5, 5, 5};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_tucker, shape, {2, 2, 2}, 23);
  AlsPlan p = plan_for(ModelKind::tucker, {2, 2, 2});
  p.rounds = 2;
  const auto res = run_completion(MaskedTensor(gt.tensor, experiment::random_mask(shape, 0.5, 23)), p);
  const std::vector<std::string> blocks{"core", "A1", "A2", "A3"};
  ASSERT_EQ(res.trace.records.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(res.trace.records[k].block, blocks[k % 4]);
    EXPECT_EQ(res.trace.records[k].round, k / 4 + 1);
    EXPECT_FALSE(res.trace.records[k].test_rre.has_value());
  }
}

TEST(Completion, RejectsBadPlans) {
  const Shape shape{3, 3};
  const MaskedTensor mx(DenseTensor(shape), ObservationMask::full(shape));
  AlsPlan p = plan_for(ModelKind::cp, {2});
  p.rounds = 0;
  EXPECT_THROW(run_completion(mx, p), std::invalid_argument);
  p.rounds = 1;
  p.ranks = {0};
  EXPECT_THROW(run_completion(mx, p), std::invalid_argument);
  p.ranks = {2};
  EXPECT_THROW(run_completion(MaskedTensor(DenseTensor(shape), ObservationMask(shape, {})), p),
               std::invalid_argument);
  AlsPlan t = plan_for(ModelKind::tucker, {2});
  EXPECT_THROW(run_completion(mx, t), std::invalid_argument);
}

TEST(Completion, MiniAlsTraceTracksDirect) {
  const Shape shape{12, 12, 12};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_cp, shape, {3}, 24);
  const ObservationMask mask = experiment::random_mask(shape, 0.3, 24);
  const MaskedTensor mx(gt.tensor, mask);
  AlsPlan d = plan_for(ModelKind::cp, {3});
  d.rounds = 5;
  d.seed = 24;
  AlsPlan m = d;
  m.strategy = InnerStrategy::mini_als;
  m.richardson.epsilon = 1e-6;
  const auto a = run_completion(mx, d, &gt.tensor);
  const auto b = run_completion(mx, m, &gt.tensor);
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t k = 0; k < a.trace.records.size(); ++k)
    EXPECT_NEAR(a.trace.records[k].train_rre, b.trace.records[k].train_rre, 1e-3);
}

TEST(Completion, SeededRunsAreReproducible) {
  const Shape shape{8, 8, 8};
  const auto gt = experiment::generate_tensor(experiment::GeneratorKind::random_cp, shape, {2}, 25);
  AlsPlan p = plan_for(ModelKind::cp, {2}, InnerStrategy::approx);
  p.richardson.epsilon = 1e-3;
  p.richardson.epsilon_hat_beta_scale = 0.25;
  p.rounds = 2;
  p.seed = 25;
  const MaskedTensor mx(gt.tensor, experiment::random_mask(shape, 0.4, 25));
  const auto a = run_completion(mx, p);
  const auto b = run_completion(mx, p);
  for (std::size_t k = 0; k < a.trace.records.size(); ++k)
    EXPECT_EQ(a.trace.records[k].train_rre, b.trace.records[k].train_rre);
  p.threads = 2;
  const auto c = run_completion(mx, p);
  EXPECT_EQ(a.trace.records.back().train_rre, c.trace.records.back().train_rre);
}
