#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"
#include "tensor_lift/experiment.hpp"

using namespace tensor_lift;
using namespace tensor_lift::experiment;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t numeric_rank(const Matrix& m, double tol) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

}  // namespace

TEST(Generate, RandomCpHasBoundedRank) {
  const auto g = generate_tensor(GeneratorKind::random_cp, {12, 10, 9}, {4}, 1);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_LE(numeric_rank(unfold(g.tensor, n), 1e-10), 4u);
  EXPECT_LE(*rre(g.model, g.tensor), 1e-15);
}

TEST(Generate, RandomTuckerMultilinearRanks) {
  const auto g = generate_tensor(GeneratorKind::random_tucker, {10, 10, 10}, {4, 4, 4}, 2);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_LE(numeric_rank(unfold(g.tensor, n), 1e-8), 4u);
}

TEST(Generate, UniformEntriesAndDeterminism) {
  const auto a = generate_tensor(GeneratorKind::random_tt, {4, 5, 3}, {2, 2}, 3);
  const auto b = generate_tensor(GeneratorKind::random_tt, {4, 5, 3}, {2, 2}, 3);
  EXPECT_EQ(a.tensor, b.tensor);
  for (const auto& c : std::get<TTModel>(a.model).cores)
    for (double v : c.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  EXPECT_THROW(generate_tensor(GeneratorKind::random_tt, {4, 5, 3}, {2}, 3), std::invalid_argument);
}

TEST(Generate, CoupledIsConsistent) {
  const auto d = generate_coupled(8, 3, 4);
  EXPECT_LE((d.A * d.X * d.B.transpose() + d.C * d.Y * d.D.transpose() - d.E).norm(), 1e-12);
}

TEST(RandomMask, CountsAndExtremes) {
  const ObservationMask full = random_mask({10, 10, 10}, 1.0, 5);
  EXPECT_EQ(full, ObservationMask::full({10, 10, 10}));
  const ObservationMask tenth = random_mask({10, 10, 10}, 0.1, 5);
  EXPECT_EQ(tenth.count(), 100u);
  EXPECT_EQ(tenth.complement().count(), 900u);
  EXPECT_EQ(random_mask({10, 10, 10}, 0.1, 5), tenth);
  EXPECT_NE(random_mask({10, 10, 10}, 0.1, 6), tenth);
  EXPECT_EQ(random_mask({10}, 1e-6, 5).count(), 1u);
  EXPECT_THROW(random_mask({10}, 0.0, 5), std::invalid_argument);
  EXPECT_THROW(random_mask({10}, 1.5, 5), std::invalid_argument);
}

TEST(CompletionCsv, SchemaAndDeterminism) {
  const Shape shape{6, 6, 6};
  const auto g = generate_tensor(GeneratorKind::random_cp, shape, {2}, 7);
  const ObservationMask mask = random_mask(shape, 0.5, 7);
  RunSpec spec;
  spec.ranks = {2};
  spec.rounds = 2;
  spec.strategy = InnerStrategy::mini_als;
  spec.seed = 7;
  std::ostringstream a, b;
  write_completion_csv(a, g.tensor, mask, spec);
  write_completion_csv(b, g.tensor, mask, spec);
  EXPECT_EQ(a.str(), b.str());
  const auto rows = parse_csv(a.str());
  ASSERT_EQ(rows.size(), 1u + 2 * 3);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), kCompletionHeader);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    ASSERT_EQ(rows[k].size(), 12u);
    EXPECT_EQ(rows[k][2], "mini-als");
    for (int col : {7, 8}) {
      const double v = std::stod(rows[k][col]);
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
    EXPECT_EQ(rows[k][9], "0");
  }
}

TEST(CompletionCsv, DirectOnFullRankExactData) {
  const Shape shape{8, 8, 8};
  const auto g = generate_tensor(GeneratorKind::random_tucker, shape, {2, 2, 2}, 8);
  RunSpec spec;
  spec.kind = ModelKind::tucker;
  spec.ranks = {2, 2, 2};
  spec.rounds = 3;
  std::ostringstream os;
  CompletionResult res;
  write_completion_csv(os, g.tensor, ObservationMask::full(shape), spec, &res);
  EXPECT_LE(*res.trace.records.back().test_rre, 1e-6);
}

TEST(CoupledCsv, HasBothMseColumns) {
  const auto d = generate_coupled(12, 2, 9);
  const auto inst = CoupledInstance::make(d.A, d.B, d.C, d.D, d.E, random_mask({12, 12}, 0.5, 9));
  RunSpec spec;
  spec.rounds = 2;
  std::ostringstream os;
  write_coupled_csv(os, inst, spec);
  const auto rows = parse_csv(os.str());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kCoupledHeader);
  EXPECT_EQ(rows[1][1], "X");
  EXPECT_EQ(rows[2][1], "Y");
}

TEST(BenchCsv, OneRowPerRateAndStrategy) {
  BenchGrid grid;
  grid.base.ranks = {2};
  grid.base.rounds = 2;
  grid.base.seed = 10;
  grid.strategies = {InnerStrategy::direct, InnerStrategy::mini_als};
  grid.rates = {0.3, 0.6};
  grid.shape = {6, 6, 6};
  grid.generator_ranks = {2};
  grid.workers = 2;
  std::ostringstream a, b;
  write_bench_csv(a, grid);
  grid.workers = 1;
  write_bench_csv(b, grid);
  EXPECT_EQ(a.str(), b.str());
  const auto rows = parse_csv(a.str());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), kBenchHeader);
}
