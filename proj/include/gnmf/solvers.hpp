#pragma once

// PALM and accelerated PALM (extrapolation with an accept/reject
// sufficient-decrease test and adaptive momentum) for
//
//   min ½‖X − WH‖²_F + λ Tr(H L Hᵀ)
//   s.t. W >= 0, ‖W‖_{2,0} <= k, H >= 0.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnmf/matrix.hpp"
#include "gnmf/objective.hpp"
#include "gnmf/prox.hpp"
#include "gnmf/random.hpp"

namespace gnmf {

enum class Algorithm { palm, acc_palm };

inline std::string to_string(Algorithm a) { return a == Algorithm::palm ? "palm" : "acc_palm"; }

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "palm") return Algorithm::palm;
  if (s == "acc_palm" || s == "accpalm") return Algorithm::acc_palm;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected palm or acc_palm)");
}

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

private:
  std::size_t iteration_;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::acc_palm;
  std::size_t max_iter = 1000;
  double epsilon = 1e-3;
  double beta0 = 0.5;
  double beta_max = 0.99;
  double t_factor = 1.1;
  double gamma_step = 1.01;
  bool adaptive_beta = true;
  std::optional<double> rho0;  // empty: min{½(c_k − L_W), ½(d_k − L_H)}
  std::uint64_t seed = 0;
  bool check_decrease = false;  // throw if an iterate breaks the decrease inequality

  void validate() const {
    if (max_iter == 0) throw std::invalid_argument("SolverConfig: max_iter must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be positive");
    if (!(beta_max >= 0.0 && beta_max < 1.0))
      throw std::invalid_argument("SolverConfig: beta_max must lie in [0, 1)");
    if (!(beta0 >= 0.0 && beta0 <= beta_max))
      throw std::invalid_argument("SolverConfig: beta0 must lie in [0, beta_max]");
    if (!(t_factor > 1.0)) throw std::invalid_argument("SolverConfig: t_factor must exceed 1");
    if (!(gamma_step > 1.0)) throw std::invalid_argument("SolverConfig: gamma_step must exceed 1");
    if (rho0 && !(*rho0 >= 0.0)) throw std::invalid_argument("SolverConfig: rho0 must be >= 0");
  }
};

/// How the current iterate was produced from the previous one.
struct StepInfo {
  double objective_before = 0.0;  // F(W^k, H^k)
  double objective_extrapolated = std::numeric_limits<double>::quiet_NaN();  // F(W̃^k, H̃^k)
  bool extrapolated_feasible = false;
  bool accepted = false;      // extrapolated candidate kept
  double step_norm_sq = 0.0;  // ‖(W^{k+1} − W̃^k, H^{k+1} − H̃^k)‖²
  double rho0 = 0.0;
  double lipschitz_w = 0.0;
  double lipschitz_h = 0.0;
  double rel_change = 0.0;
};

struct SolverState {
  Matrix w, h;
  Matrix w_prev, h_prev;
  double beta = 0.0;
  std::size_t iter = 0;
  double c_k = 0.0, d_k = 0.0;
  double objective = 0.0;
  StepInfo step;
};

struct TraceRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double rel_change = 0.0;
  double beta = 0.0;  // momentum used for this step
  bool accepted = false;
  double c_k = 0.0, d_k = 0.0;
  double elapsed_s = 0.0;
  double step_norm_sq = 0.0;
  double rho0 = 0.0;
};

struct ConvergenceTrace {
  Algorithm algorithm = Algorithm::acc_palm;
  double initial_objective = 0.0;
  std::vector<TraceRecord> records;
  bool converged = false;

  std::size_t iterations() const noexcept { return records.size(); }
  double final_objective() const noexcept {
    return records.empty() ? initial_objective : records.back().objective;
  }
};

struct SolveResult {
  Matrix w, h;
  ConvergenceTrace trace;
};

/// ‖(A, B)‖ = sqrt(‖A‖²_F + ‖B‖²_F)
inline double pair_norm(const Matrix& a, const Matrix& b) {
  return std::sqrt(squared_frobenius_norm(a) + squared_frobenius_norm(b));
}

/// Uniform entries scaled by 2·sqrt(mean(X)/r), so that E[mean(W⁰H⁰)] =
/// mean(X) before the row budget is applied to W⁰.
inline std::pair<Matrix, Matrix> init_factors(const ProblemSpec& spec, std::uint64_t seed) {
  const std::size_t p = spec.features(), n = spec.samples(), r = spec.rank;
  const double s = 2.0 * std::sqrt(std::max(mean(spec.x), 0.0) / static_cast<double>(r));
  Rng rng(seed);
  Matrix w(p, r), h(r, n);
  for (double& v : w.values()) v = s * rng.uniform();
  for (double& v : h.values()) v = s * rng.uniform();
  return {project_row_sparse(w, spec.sparsity_k).matrix, std::move(h)};
}

inline SolverState initial_state(const ProblemSpec& spec, const SolverConfig& config) {
  auto [w, h] = init_factors(spec, config.seed);
  SolverState s;
  s.objective = smooth_objective(w, h, spec);
  s.w_prev = w;
  s.h_prev = h;
  s.w = std::move(w);
  s.h = std::move(h);
  s.beta = config.algorithm == Algorithm::palm ? 0.0 : config.beta0;
  return s;
}

inline bool is_feasible(const Matrix& w, const Matrix& h, std::size_t k) {
  return min_entry(w) >= 0.0 && min_entry(h) >= 0.0 && l20_norm(w) <= k;
}

namespace detail {

inline Matrix checked(Matrix g, const char* what, std::size_t iter) {
  if (!g.all_finite()) throw SolverError(std::string("non-finite ") + what, iter);
  return g;
}

struct BlockUpdate {
  Matrix w, h;
  double lw = 0.0, lh = 0.0;
  double c = 0.0, d = 0.0;
};

/// One Gauss-Seidel pass: W-step from w_from against h_k, then H-step from
/// h_from against the new W. `lw` is L_W at h_k.
inline BlockUpdate block_update(const Matrix& w_from, const Matrix& h_k, const Matrix& h_from,
                                double lw, const ProblemSpec& spec, double gamma,
                                std::size_t iter) {
  BlockUpdate u;
  u.lw = lw;
  u.c = gamma * lw;
  const Matrix gw = checked(grad_w(w_from, h_k, spec), "gradient in W", iter);
  u.w = project_row_sparse(axpy(w_from, -1.0 / u.c, gw), spec.sparsity_k).matrix;
  u.lh = lipschitz_h(u.w, spec);
  u.d = gamma * u.lh;
  const Matrix gh = checked(grad_h(u.w, h_from, spec), "gradient in H", iter);
  u.h = project_nonneg(axpy(h_from, -1.0 / u.d, gh));
  return u;
}

inline double relative_change(const Matrix& w, const Matrix& h, const Matrix& w_old,
                              const Matrix& h_old) {
  const double num = std::sqrt(squared_distance(w, w_old) + squared_distance(h, h_old));
  const double den = pair_norm(w_old, h_old);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

inline double derived_rho0(const BlockUpdate& u) {
  return std::min(0.5 * (u.c - u.lw), 0.5 * (u.d - u.lh));
}

inline SolverState advance(const SolverState& state, BlockUpdate u, double objective,
                           StepInfo info, double next_beta) {
  SolverState next;
  info.objective_before = state.objective;
  info.lipschitz_w = u.lw;
  info.lipschitz_h = u.lh;
  info.rel_change = relative_change(u.w, u.h, state.w, state.h);
  next.w_prev = state.w;
  next.h_prev = state.h;
  next.w = std::move(u.w);
  next.h = std::move(u.h);
  next.beta = next_beta;
  next.iter = state.iter + 1;
  next.c_k = u.c;
  next.d_k = u.d;
  next.objective = objective;
  next.step = info;
  return next;
}

}  // namespace detail

/// Plain PALM iteration.
inline SolverState palm_step(const SolverState& state, const ProblemSpec& spec,
                             const SolverConfig& config = {}) {
  const std::size_t iter = state.iter + 1;
  auto u = detail::block_update(state.w, state.h, state.h, lipschitz_w(state.h), spec,
                                config.gamma_step, iter);
  StepInfo info;
  info.objective_extrapolated = state.objective;
  info.extrapolated_feasible = true;
  info.step_norm_sq = squared_distance(u.w, state.w) + squared_distance(u.h, state.h);
  info.rho0 = config.rho0 ? *config.rho0 : detail::derived_rho0(u);
  const double f = smooth_objective(u.w, u.h, spec);
  return detail::advance(state, std::move(u), f, info, state.beta);
}

/// accPALM iteration: extrapolate both blocks by β, take the PALM pass from
/// the extrapolated point and keep it if it passes the sufficient-decrease
/// test against F(W^k, H^k); otherwise redo the pass from (W^k, H^k).
inline SolverState acc_palm_step(const SolverState& state, const ProblemSpec& spec,
                                 const SolverConfig& config) {
  const std::size_t iter = state.iter + 1;
  const double beta = state.beta;
  const Matrix w_ex = axpy(state.w, beta, sub(state.w, state.w_prev));
  const Matrix h_ex = axpy(state.h, beta, sub(state.h, state.h_prev));

  // c_k depends only on H^k, so both branches share it.
  const double lw = lipschitz_w(state.h);
  auto cand = detail::block_update(w_ex, state.h, h_ex, lw, spec, config.gamma_step, iter);
  const double rho0 = config.rho0 ? *config.rho0 : detail::derived_rho0(cand);
  const double gap = squared_distance(cand.w, w_ex) + squared_distance(cand.h, h_ex);
  const double f_cand = smooth_objective(cand.w, cand.h, spec);
  if (!std::isfinite(f_cand)) throw SolverError("non-finite objective", iter);

  StepInfo info;
  info.extrapolated_feasible = is_feasible(w_ex, h_ex, spec.sparsity_k);
  if (info.extrapolated_feasible) info.objective_extrapolated = smooth_objective(w_ex, h_ex, spec);

  const auto grow = [&](double b) {
    return config.adaptive_beta ? std::min(config.t_factor * b, config.beta_max) : b;
  };
  const auto shrink = [&](double b) { return config.adaptive_beta ? b / config.t_factor : b; };

  if (f_cand <= state.objective - rho0 * gap) {
    info.accepted = true;
    info.rho0 = rho0;
    info.step_norm_sq = gap;
    return detail::advance(state, std::move(cand), f_cand, info, grow(beta));
  }

  auto u = detail::block_update(state.w, state.h, state.h, lw, spec, config.gamma_step, iter);
  info.accepted = false;
  info.rho0 = config.rho0 ? *config.rho0 : detail::derived_rho0(u);
  info.step_norm_sq = squared_distance(u.w, state.w) + squared_distance(u.h, state.h);
  const double f = smooth_objective(u.w, u.h, spec);
  return detail::advance(state, std::move(u), f, info, shrink(beta));
}

inline SolverState step(const SolverState& state, const ProblemSpec& spec,
                        const SolverConfig& config) {
  return config.algorithm == Algorithm::palm ? palm_step(state, spec, config)
                                             : acc_palm_step(state, spec, config);
}

using IterateObserver = std::function<void(const SolverState&)>;

/// Runs from the seeded initialization until the relative change of the
/// stacked iterate drops below epsilon or max_iter iterations have run.
inline SolveResult solve_from(SolverState state, const ProblemSpec& spec,
                              const SolverConfig& config, const IterateObserver& observer = {}) {
  spec.validate();
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ConvergenceTrace trace;
  trace.algorithm = config.algorithm;
  trace.initial_objective = state.objective;
  trace.records.reserve(std::min<std::size_t>(config.max_iter, 4096));

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    const double beta_used = state.beta;
    SolverState next = step(state, spec, config);
    const StepInfo s = next.step;
    if (config.check_decrease) {
      const double slack = 1e-10 * std::max(1.0, std::abs(s.objective_before));
      if (next.objective > s.objective_before - s.rho0 * s.step_norm_sq + slack &&
          (config.algorithm == Algorithm::palm || s.accepted)) {
        throw SolverError("sufficient-decrease inequality violated", next.iter);
      }
      if (next.objective > s.objective_before + slack) {
        throw SolverError("objective increased", next.iter);
      }
    }
    TraceRecord rec;
    rec.iter = next.iter;
    rec.objective = next.objective;
    rec.rel_change = s.rel_change;
    rec.beta = beta_used;
    rec.accepted = s.accepted;
    rec.c_k = next.c_k;
    rec.d_k = next.d_k;
    rec.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.step_norm_sq = s.step_norm_sq;
    rec.rho0 = s.rho0;
    trace.records.push_back(rec);
    if (observer) observer(next);
    state = std::move(next);
    if (s.rel_change < config.epsilon) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(state.w), std::move(state.h), std::move(trace)};
}

inline SolveResult solve(const ProblemSpec& spec, const SolverConfig& config,
                         const IterateObserver& observer = {}) {
  spec.validate();
  config.validate();
  return solve_from(initial_state(spec, config), spec, config, observer);
}

}  // namespace gnmf
