#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gnmf/datagen.hpp"
#include "gnmf/graph.hpp"
#include "oracles.hpp"

namespace gnmf {
namespace {

void expect_graph_invariants(const GraphModel& g, bool nonneg_weights) {
  const Matrix& a = g.adjacency();
  const std::size_t n = g.nodes();
  for (std::size_t j = 0; j < n; ++j) {
    EXPECT_EQ(a(j, j), 0.0);
    double row = 0.0, lrow = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      EXPECT_EQ(a(j, l), a(l, j));
      if (nonneg_weights) {
        EXPECT_GE(a(j, l), 0.0);
      }
      if (l != j) {
        EXPECT_EQ(g.degree()(j, l), 0.0);
      }
      row += a(j, l);
      lrow += g.laplacian()(j, l);
    }
    EXPECT_NEAR(g.degree()(j, j), row, 1e-12);
    EXPECT_NEAR(lrow, 0.0, 1e-10);
  }
}

TEST(KnnGraph, IdenticalColumnsGetUnitGaussianWeight) {
  const Matrix x{{1, 1, 5}, {2, 2, 9}};
  const GraphModel g = build_knn_graph(x, 1, GaussianKernel{1.0});
  EXPECT_EQ(g.adjacency()(0, 1), 1.0);
  expect_graph_invariants(g, true);
}

TEST(KnnGraph, OrthonormalColumnsGetZeroDotProduct) {
  const Matrix x{{1, 0}, {0, 1}};
  const GraphModel g = build_knn_graph(x, 1, DotProduct{});
  EXPECT_EQ(g.adjacency()(0, 1), 0.0);
}

TEST(KnnGraph, ThreePointsMatchesExhaustiveOracle) {
  // Points on a line at 0, 1, 3: pairwise distances 1, 2, 3.
  const Matrix x{{0, 1, 3}};
  const GraphModel g = build_knn_graph(x, 1, ZeroOne{});
  // Oracle: each point's nearest neighbor by exhaustive scan, then symmetrize.
  Matrix want(3, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    std::size_t best = j == 0 ? 1 : 0;
    for (std::size_t l = 0; l < 3; ++l) {
      if (l == j) continue;
      if (std::abs(x(0, l) - x(0, j)) < std::abs(x(0, best) - x(0, j))) best = l;
    }
    want(j, best) = want(best, j) = 1.0;
  }
  EXPECT_EQ(g.adjacency(), want);
  // The two closest pairs, (0,1) and (1,2), are the only edges.
  EXPECT_EQ(g.adjacency()(0, 1), 1.0);
  EXPECT_EQ(g.adjacency()(1, 2), 1.0);
  EXPECT_EQ(g.adjacency()(0, 2), 0.0);
}

TEST(KnnGraph, InvariantsHoldForAllSchemes) {
  Rng rng(21);
  const Matrix x = oracle::random_matrix(rng, 4, 25, 0.0, 1.0);
  for (const WeightScheme& s : {WeightScheme{ZeroOne{}}, WeightScheme{GaussianKernel{}},
                                WeightScheme{GaussianKernel{0.3}}, WeightScheme{DotProduct{}}}) {
    const GraphModel g = build_knn_graph(x, 5, s);
    expect_graph_invariants(g, !std::holds_alternative<DotProduct>(s));
    EXPECT_EQ(g.neighbors(), std::optional<std::size_t>(5));
    // Every node has at least `neighbors` incident edges after symmetrization.
    for (std::size_t j = 0; j < 25; ++j) {
      std::size_t deg = 0;
      for (std::size_t l = 0; l < 25; ++l) deg += g.adjacency()(j, l) != 0.0;
      if (!std::holds_alternative<DotProduct>(s)) {
        EXPECT_GE(deg, 5u);
      }
    }
  }
}

TEST(KnnGraph, DefaultSigmaIsMedianConnectedDistance) {
  Rng rng(23);
  const Matrix x = oracle::random_matrix(rng, 3, 12, 0.0, 1.0);
  const GraphModel g = build_knn_graph(x, 3, GaussianKernel{});
  const auto& gk = std::get<GaussianKernel>(g.scheme());
  ASSERT_TRUE(gk.sigma.has_value());
  std::vector<double> d;
  for (std::size_t j = 0; j < 12; ++j)
    for (std::size_t l = j + 1; l < 12; ++l)
      if (g.adjacency()(j, l) > 0.0) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += (x(i, j) - x(i, l)) * (x(i, j) - x(i, l));
        d.push_back(std::sqrt(s));
      }
  std::sort(d.begin(), d.end());
  const double med = d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
  EXPECT_DOUBLE_EQ(*gk.sigma, med);
}

TEST(KnnGraph, RejectsBadArguments) {
  const Matrix x{{0, 1, 2}};
  EXPECT_THROW(build_knn_graph(x, 3), std::invalid_argument);
  EXPECT_THROW(build_knn_graph(x, 0), std::invalid_argument);
  EXPECT_THROW(build_knn_graph(x, 1, GaussianKernel{0.0}), std::invalid_argument);
  EXPECT_THROW(build_knn_graph(x, 1, GaussianKernel{-1.0}), std::invalid_argument);
}

TEST(FromAdjacency, SingleEdge) {
  const GraphModel g = from_adjacency(Matrix{{0, 1}, {1, 0}});
  EXPECT_EQ(g.laplacian(), (Matrix{{1, -1}, {-1, 1}}));
  EXPECT_FALSE(g.neighbors().has_value());
}

TEST(FromAdjacency, ZeroMatrix) {
  const GraphModel g = from_adjacency(Matrix(4, 4));
  EXPECT_EQ(g.laplacian(), Matrix(4, 4));
  EXPECT_EQ(g.laplacian_norm(), 0.0);
}

TEST(FromAdjacency, RejectsInvalidInput) {
  EXPECT_THROW(from_adjacency(Matrix{{0, 1}, {2, 0}}), std::invalid_argument);
  EXPECT_THROW(from_adjacency(Matrix{{1, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(from_adjacency(Matrix(2, 3)), DimensionError);
}

TEST(FromAdjacency, SyntheticBlockAdjacencyHasZeroRowSums) {
  const GraphModel g = from_adjacency(generate_block_adjacency({}));
  expect_graph_invariants(g, true);
}

TEST(FromAdjacency, LaplacianNormMatchesJacobi) {
  Rng rng(29);
  const GraphModel g = from_adjacency(oracle::random_adjacency(rng, 10));
  EXPECT_NEAR(g.laplacian_norm(), oracle::symmetric_spectral_norm(g.laplacian()), 1e-6);
}

TEST(LaplacianQuadratic, ConstantEmbeddingAndEmptyGraphGiveZero) {
  Rng rng(31);
  const GraphModel g = from_adjacency(oracle::random_adjacency(rng, 6));
  Matrix h(2, 6);
  for (std::size_t j = 0; j < 6; ++j) {
    h(0, j) = 0.7;
    h(1, j) = -2.0;
  }
  EXPECT_NEAR(laplacian_quadratic(h, g), 0.0, 1e-12);
  EXPECT_EQ(laplacian_quadratic(oracle::random_matrix(rng, 2, 6), from_adjacency(Matrix(6, 6))),
            0.0);
}

TEST(LaplacianQuadratic, MatchesPairwiseSum) {
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = oracle::random_adjacency(rng, 5);
    const Matrix h = oracle::random_matrix(rng, 2, 5);
    EXPECT_NEAR(laplacian_quadratic(h, from_adjacency(a)), oracle::pairwise_smoothness(h, a),
                1e-10);
  }
}

TEST(LaplacianQuadratic, PositiveSemidefiniteForNonnegativeWeights) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const GraphModel g = from_adjacency(oracle::random_adjacency(rng, 8));
    EXPECT_GE(laplacian_quadratic(oracle::random_matrix(rng, 3, 8), g), -1e-12);
  }
}

TEST(LaplacianQuadratic, DimensionMismatch) {
  EXPECT_THROW(laplacian_quadratic(Matrix(2, 3), from_adjacency(Matrix(4, 4))), DimensionError);
}

}  // namespace
}  // namespace gnmf
