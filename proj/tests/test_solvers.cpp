#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "gnmf/solvers.hpp"
#include "oracles.hpp"
#include "problems.hpp"

namespace gnmf {
namespace {

using testing::default_synthetic;

SolverConfig config_for(Algorithm a, std::uint64_t seed = 0) {
  SolverConfig c;
  c.algorithm = a;
  c.seed = seed;
  return c;
}

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(SolverConfig{}.validate());
  auto bad = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), std::invalid_argument);
  };
  bad([](SolverConfig& c) { c.max_iter = 0; });
  bad([](SolverConfig& c) { c.epsilon = 0.0; });
  bad([](SolverConfig& c) { c.beta_max = 1.0; });
  bad([](SolverConfig& c) { c.beta0 = 0.995; });
  bad([](SolverConfig& c) { c.t_factor = 1.0; });
  bad([](SolverConfig& c) { c.gamma_step = 1.0; });
  bad([](SolverConfig& c) { c.rho0 = -1.0; });
  EXPECT_EQ(parse_algorithm("palm"), Algorithm::palm);
  EXPECT_EQ(parse_algorithm("acc_palm"), Algorithm::acc_palm);
  EXPECT_THROW(parse_algorithm("ipalm"), std::invalid_argument);
}

TEST(InitFactors, DeterministicAndFeasible) {
  const auto prob = default_synthetic(1.0, 5);
  const auto [w1, h1] = init_factors(prob.spec, 42);
  const auto [w2, h2] = init_factors(prob.spec, 42);
  EXPECT_EQ(w1, w2);
  EXPECT_EQ(h1, h2);
  EXPECT_LE(l20_norm(w1), 5u);
  EXPECT_TRUE(is_feasible(w1, h1, 5));
  EXPECT_NE(init_factors(prob.spec, 43).first, w1);
}

TEST(InitFactors, ProductMeanMatchesDataScale) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 5 + rng.below(20), n = 5 + rng.below(40);
    const std::size_t r = 1 + rng.below(4);
    const ProblemSpec spec{oracle::random_matrix(rng, p, n, 0.0, rng.uniform(0.1, 10.0)), r, p,
                           0.0, nullptr};
    const auto [w, h] = init_factors(spec, static_cast<std::uint64_t>(trial));
    const double ratio = mean(matmul(w, h)) / mean(spec.x);
    EXPECT_GT(ratio, 1.0 / 3.0);
    EXPECT_LT(ratio, 3.0);
  }
}

TEST(PalmStep, FixedPointHasZeroChange) {
  Rng rng(2);
  const Matrix w = oracle::random_matrix(rng, 4, 2, 0.1, 1.0);
  const Matrix h = oracle::random_matrix(rng, 2, 6, 0.1, 1.0);
  const ProblemSpec spec{matmul(w, h), 2, 4, 0.0, nullptr};
  SolverState s;
  s.w = s.w_prev = w;
  s.h = s.h_prev = h;
  s.objective = smooth_objective(w, h, spec);
  const SolverState next = palm_step(s, spec);
  EXPECT_EQ(next.step.rel_change, 0.0);
  EXPECT_EQ(next.w, w);
  EXPECT_EQ(next.h, h);
}

TEST(PalmStep, StepSizesFollowLipschitzConstants) {
  const auto prob = default_synthetic();
  const SolverConfig cfg = config_for(Algorithm::palm);
  const SolverState s0 = initial_state(prob.spec, cfg);
  const SolverState s1 = palm_step(s0, prob.spec, cfg);
  EXPECT_DOUBLE_EQ(s1.c_k, 1.01 * lipschitz_w(s0.h));
  EXPECT_DOUBLE_EQ(s1.d_k, 1.01 * lipschitz_h(s1.w, prob.spec));
  EXPECT_LE(s1.objective, s0.objective);
  EXPECT_GT(s1.step.rho0, 0.0);
}

TEST(PalmStep, FromZeroFactorsDoesNotIncrease) {
  Rng rng(3);
  const ProblemSpec spec{oracle::random_matrix(rng, 5, 6, 0.0, 1.0), 2, 5, 0.0, nullptr};
  SolverState s;
  s.w = s.w_prev = Matrix(5, 2);
  s.h = s.h_prev = Matrix(2, 6);
  s.objective = smooth_objective(s.w, s.h, spec);
  const SolverState next = palm_step(s, spec);
  EXPECT_LE(next.objective, s.objective);
  // Both gradients vanish at the origin, so nothing moves.
  EXPECT_EQ(next.w, Matrix(5, 2));
}

TEST(AccPalmStep, ZeroMomentumEqualsPalm) {
  const auto prob = default_synthetic();
  SolverConfig cfg = config_for(Algorithm::acc_palm, 3);
  SolverState s = initial_state(prob.spec, cfg);
  // Walk a few PALM steps so that W_prev differs from W.
  for (int i = 0; i < 3; ++i) s = palm_step(s, prob.spec, cfg);
  s.beta = 0.0;
  const SolverState a = acc_palm_step(s, prob.spec, cfg);
  const SolverState b = palm_step(s, prob.spec, cfg);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.h, b.h);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(AccPalmStep, NoHistoryMeansNoExtrapolation) {
  const auto prob = default_synthetic();
  SolverConfig cfg = config_for(Algorithm::acc_palm, 4);
  const SolverState s = initial_state(prob.spec, cfg);
  ASSERT_EQ(s.w, s.w_prev);
  const SolverState a = acc_palm_step(s, prob.spec, cfg);
  const SolverState b = palm_step(s, prob.spec, cfg);
  EXPECT_TRUE(a.step.accepted);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.h, b.h);
  EXPECT_DOUBLE_EQ(a.beta, 0.55);
}

TEST(AccPalmStep, FixedMomentumMode) {
  const auto prob = default_synthetic();
  SolverConfig cfg = config_for(Algorithm::acc_palm, 5);
  cfg.adaptive_beta = false;
  cfg.beta0 = 0.3;
  std::vector<double> betas;
  solve(prob.spec, cfg, [&](const SolverState& s) { betas.push_back(s.beta); });
  for (double b : betas) EXPECT_EQ(b, 0.3);
}

TEST(Solve, HugeToleranceStopsAfterOneIteration) {
  const auto prob = default_synthetic();
  SolverConfig cfg;
  cfg.epsilon = 1e300;
  const auto r = solve(prob.spec, cfg);
  EXPECT_EQ(r.trace.iterations(), 1u);
  EXPECT_TRUE(r.trace.converged);
}

TEST(Solve, MaxIterFlagsNonConvergence) {
  const auto prob = default_synthetic();
  SolverConfig cfg;
  cfg.max_iter = 3;
  cfg.epsilon = 1e-15;
  const auto r = solve(prob.spec, cfg);
  EXPECT_EQ(r.trace.iterations(), 3u);
  EXPECT_FALSE(r.trace.converged);
}

TEST(Solve, DeterministicTraces) {
  const auto prob = default_synthetic();
  for (Algorithm a : {Algorithm::palm, Algorithm::acc_palm}) {
    const auto r1 = solve(prob.spec, config_for(a, 9));
    const auto r2 = solve(prob.spec, config_for(a, 9));
    EXPECT_EQ(r1.w, r2.w);
    EXPECT_EQ(r1.h, r2.h);
    ASSERT_EQ(r1.trace.iterations(), r2.trace.iterations());
    for (std::size_t i = 0; i < r1.trace.iterations(); ++i) {
      const auto &x = r1.trace.records[i], &y = r2.trace.records[i];
      EXPECT_EQ(x.objective, y.objective);
      EXPECT_EQ(x.rel_change, y.rel_change);
      EXPECT_EQ(x.beta, y.beta);
      EXPECT_EQ(x.accepted, y.accepted);
      EXPECT_EQ(x.c_k, y.c_k);
      EXPECT_EQ(x.d_k, y.d_k);
    }
  }
}

class SolverInvariants : public ::testing::TestWithParam<Algorithm> {};

TEST_P(SolverInvariants, DescentFeasibilityAndMomentumBounds) {
  const auto prob = default_synthetic();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SolverConfig cfg = config_for(GetParam(), seed);
    cfg.check_decrease = true;
    std::size_t violations = 0;
    const auto r = solve(prob.spec, cfg, [&](const SolverState& s) {
      if (!is_feasible(s.w, s.h, prob.spec.sparsity_k)) ++violations;
      if (!(s.beta >= 0.0 && s.beta <= cfg.beta_max)) ++violations;
    });
    EXPECT_EQ(violations, 0u);
    double prev = r.trace.initial_objective;
    for (const auto& rec : r.trace.records) {
      EXPECT_LE(rec.objective, prev + 1e-10);
      prev = rec.objective;
    }
  }
}

TEST_P(SolverInvariants, StepGapShrinks) {
  const auto prob = default_synthetic();
  const SolverConfig cfg = config_for(GetParam(), 1);
  const auto r = solve(prob.spec, cfg);
  ASSERT_TRUE(r.trace.converged);
  const auto& rec = r.trace.records;
  ASSERT_GE(rec.size(), 20u);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    first += rec[i].step_norm_sq;
    last += rec[rec.size() - 1 - i].step_norm_sq;
  }
  EXPECT_LT(last, first);
}

INSTANTIATE_TEST_SUITE_P(Algorithms, SolverInvariants,
                         ::testing::Values(Algorithm::palm, Algorithm::acc_palm),
                         [](const auto& info) { return to_string(info.param); });

TEST(Solve, AcceptedStepsSatisfySufficientDecrease) {
  const auto prob = default_synthetic();
  SolverConfig cfg = config_for(Algorithm::acc_palm, 2);
  std::size_t accepted = 0, feasible_checks = 0;
  solve(prob.spec, cfg, [&](const SolverState& s) {
    if (!s.step.accepted) return;
    ++accepted;
    EXPECT_GT(s.step.rho0, 0.0);
    EXPECT_LE(s.objective, s.step.objective_before - s.step.rho0 * s.step.step_norm_sq + 1e-10);
    if (s.step.extrapolated_feasible) {
      ++feasible_checks;
      EXPECT_LE(s.objective,
                s.step.objective_extrapolated - s.step.rho0 * s.step.step_norm_sq + 1e-10);
    }
  });
  EXPECT_GT(accepted, 0u);
  EXPECT_GT(feasible_checks, 0u);
}

TEST(Solve, RankOneRecoveredByPalm) {
  Rng rng(4);
  const Matrix w = oracle::random_matrix(rng, 8, 1, 0.2, 1.0);
  const Matrix h = oracle::random_matrix(rng, 1, 12, 0.2, 1.0);
  const ProblemSpec spec{matmul(w, h), 1, 8, 0.0, nullptr};
  SolverConfig cfg = config_for(Algorithm::palm);
  cfg.max_iter = 500;
  cfg.epsilon = 1e-14;
  const auto r = solve(spec, cfg);
  EXPECT_LT(r.trace.final_objective(), 1e-6);
}

TEST(Solve, GraphIgnoredWithoutRegularization) {
  auto prob = default_synthetic(0.0, 20);
  ProblemSpec bare = prob.spec;
  bare.graph = nullptr;
  const auto a = solve(prob.spec, config_for(Algorithm::palm));
  const auto b = solve(bare, config_for(Algorithm::palm));
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.trace.final_objective(), b.trace.final_objective());
}

TEST(Solve, AcceleratedStopsSoonerOnSeedZero) {
  // model defaults: no graph term, no row budget
  const auto prob = default_synthetic(0.0, 20);
  const auto palm = solve(prob.spec, config_for(Algorithm::palm));
  const auto accel = solve(prob.spec, config_for(Algorithm::acc_palm));
  EXPECT_LT(accel.trace.iterations(), palm.trace.iterations());
}

TEST(Solve, NonFiniteGradientReportsIteration) {
  Rng rng(5);
  const ProblemSpec spec{oracle::random_matrix(rng, 3, 4, 0.0, 1.0), 2, 3, 0.0, nullptr};
  SolverState s;
  s.w = s.w_prev = Matrix::constant(3, 2, 1e200);
  s.h = s.h_prev = Matrix::constant(2, 4, 1e200);
  try {
    solve_from(s, spec, config_for(Algorithm::palm));
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.iteration(), 1u);
  }
}

}  // namespace
}  // namespace gnmf
