#include <gtest/gtest.h>

#include <cmath>

#include "gnmf/prox.hpp"
#include "oracles.hpp"

namespace gnmf {
namespace {

TEST(ProjectNonneg, Examples) {
  const Matrix pos{{1, 2}, {0, 3}};
  EXPECT_EQ(project_nonneg(pos), pos);
  EXPECT_EQ(project_nonneg(Matrix{{-1, 2}, {0, -3}}), (Matrix{{0, 2}, {0, 0}}));
}

TEST(ProjectNonneg, EntrywiseClipIsClosestPoint) {
  Rng rng(1);
  const Matrix m = oracle::random_matrix(rng, 5, 4);
  const Matrix p = project_nonneg(m);
  // Any other nonnegative value in a coordinate is at least as far away.
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = m.values()[i];
    for (double c : {0.0, 0.25, 0.5, 1.0, std::abs(v)}) {
      EXPECT_LE(std::abs(p.values()[i] - v), std::abs(c - v));
    }
    EXPECT_GE(p.values()[i], 0.0);
  }
}

TEST(ProjectNonneg, NonExpansive) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 4, 3), b = oracle::random_matrix(rng, 4, 3);
    EXPECT_LE(squared_distance(project_nonneg(a), project_nonneg(b)), squared_distance(a, b));
  }
}

TEST(ProjectRowSparse, FullBudgetEqualsNonneg) {
  Rng rng(3);
  const Matrix m = oracle::random_matrix(rng, 6, 3);
  EXPECT_EQ(project_row_sparse(m, 6).matrix, project_nonneg(m));
}

TEST(ProjectRowSparse, DominantRowSurvives) {
  const Matrix m{{3, 4}, {0, 0}, {1, 0}};
  const auto r = project_row_sparse(m, 1);
  EXPECT_EQ(r.matrix, (Matrix{{3, 4}, {0, 0}, {0, 0}}));
  EXPECT_EQ(r.selection.kept_rows, std::vector<std::size_t>{0});
  EXPECT_EQ(r.selection.row_norms, (std::vector<double>{5, 0, 1}));
}

TEST(ProjectRowSparse, SelectsOnNormsAfterClipping) {
  // Row 0 has the largest raw norm but is entirely negative.
  const Matrix m{{-10, -10}, {1, 0}, {0, 2}};
  const auto r = project_row_sparse(m, 1);
  EXPECT_EQ(r.selection.kept_rows, std::vector<std::size_t>{2});
}

TEST(ProjectRowSparse, TiesKeepLowerIndex) {
  const Matrix m{{1, 0}, {0, 1}, {1, 0}, {0.5, 0}};
  EXPECT_EQ(project_row_sparse(m, 2).selection.kept_rows, (std::vector<std::size_t>{0, 1}));
}

TEST(ProjectRowSparse, RejectsBudgetOutOfRange) {
  EXPECT_THROW(project_row_sparse(Matrix(3, 2), 0), std::invalid_argument);
  EXPECT_THROW(project_row_sparse(Matrix(3, 2), 4), std::invalid_argument);
}

TEST(ProjectRowSparse, MatchesSupportEnumerationOn4x2) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix m = oracle::random_matrix(rng, 4, 2, 0.0, 1.0);
    const auto oracle_result = oracle::enumerate_row_support_projection(m, 2);
    ASSERT_TRUE(oracle_result.unique);
    EXPECT_EQ(project_row_sparse(m, 2).matrix, oracle_result.best);
  }
}

TEST(ProjectRowSparse, MatchesSupportEnumerationUpTo7Rows) {
  Rng rng(5);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t p = 2 + rng.below(6);
    const std::size_t k = 1 + rng.below(p);
    const Matrix m = oracle::random_matrix(rng, p, 3);
    const auto o = oracle::enumerate_row_support_projection(m, k);
    if (!o.unique) continue;
    ++compared;
    const Matrix got = project_row_sparse(m, k).matrix;
    for (std::size_t i = 0; i < got.size(); ++i)
      EXPECT_NEAR(got.values()[i], o.best.values()[i], 1e-12);
  }
  EXPECT_GT(compared, 200);
}

TEST(ProjectRowSparse, IdempotentAndFeasible) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 1 + rng.below(8);
    const std::size_t k = 1 + rng.below(p);
    const Matrix m = oracle::random_matrix(rng, p, 1 + rng.below(4));
    const Matrix once = project_row_sparse(m, k).matrix;
    EXPECT_EQ(project_row_sparse(once, k).matrix, once);
    EXPECT_LE(l20_norm(once), k);
    EXPECT_GE(min_entry(once), 0.0);
  }
}

TEST(L20Norm, CountsNonzeroRows) {
  EXPECT_EQ(l20_norm(Matrix{{0, 0}, {0, 1e-300}, {2, 0}}), 2u);
  EXPECT_EQ(l20_norm(Matrix(3, 3)), 0u);
}

}  // namespace
}  // namespace gnmf
