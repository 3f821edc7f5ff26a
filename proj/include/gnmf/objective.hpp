#pragma once

// Smooth part F(W, H) = ½‖X − WH‖²_F + λ·Tr(H L Hᵀ) of the row-sparse
// graph-regularized NMF objective, its block gradients and the block
// Lipschitz constants used as step sizes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

#include "gnmf/graph.hpp"
#include "gnmf/matrix.hpp"

namespace gnmf {

/// Lower clamp on Lipschitz constants so step denominators never vanish.
inline constexpr double kLipschitzFloor = 1e-12;

struct ProblemSpec {
  Matrix x;                 // p x n, samples in columns
  std::size_t rank = 1;     // r
  std::size_t sparsity_k = 1;  // max nonzero rows of W
  double lambda = 0.0;
  std::shared_ptr<const GraphModel> graph;  // may be null only when lambda == 0

  std::size_t features() const noexcept { return x.rows(); }
  std::size_t samples() const noexcept { return x.cols(); }

  void validate() const {
    const std::size_t p = x.rows(), n = x.cols();
    if (p == 0 || n == 0) throw std::invalid_argument("ProblemSpec: empty data matrix");
    if (rank == 0 || rank > std::min(p, n)) {
      throw std::invalid_argument("ProblemSpec: rank " + std::to_string(rank) +
                                  " outside [1, min(p, n)] for data " + x.shape());
    }
    if (sparsity_k == 0 || sparsity_k > p) {
      throw std::invalid_argument("ProblemSpec: sparsity_k " + std::to_string(sparsity_k) +
                                  " outside [1, " + std::to_string(p) + "]");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("ProblemSpec: lambda must be finite and nonnegative");
    }
    for (double v : x.values()) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("ProblemSpec: data entries must be finite and nonnegative");
      }
    }
    if (graph) {
      if (graph->nodes() != n) {
        throw DimensionError("ProblemSpec: graph has " + std::to_string(graph->nodes()) +
                             " nodes but data has " + std::to_string(n) + " samples");
      }
    } else if (lambda != 0.0) {
      throw std::invalid_argument("ProblemSpec: lambda > 0 requires a graph");
    }
  }

  double laplacian_norm() const noexcept { return graph ? graph->laplacian_norm() : 0.0; }
};

namespace detail {

inline void check_factor_shapes(const Matrix& w, const Matrix& h, const ProblemSpec& spec,
                                const char* op) {
  if (w.rows() != spec.features() || h.cols() != spec.samples() || w.cols() != h.rows()) {
    throw DimensionError(std::string(op) + ": factors " + w.shape() + " and " + h.shape() +
                         " do not conform to data " + spec.x.shape());
  }
}

/// WH − X
inline Matrix residual(const Matrix& w, const Matrix& h, const Matrix& x) {
  return sub(matmul(w, h), x);
}

}  // namespace detail

inline double smooth_objective(const Matrix& w, const Matrix& h, const ProblemSpec& spec) {
  detail::check_factor_shapes(w, h, spec, "smooth_objective");
  double f = 0.5 * squared_frobenius_norm(detail::residual(w, h, spec.x));
  if (spec.lambda != 0.0) f += spec.lambda * laplacian_quadratic(h, *spec.graph);
  return f;
}

/// ∇_W F = W H Hᵀ − X Hᵀ
inline Matrix grad_w(const Matrix& w, const Matrix& h, const ProblemSpec& spec) {
  detail::check_factor_shapes(w, h, spec, "grad_w");
  return matmul_nt(detail::residual(w, h, spec.x), h);
}

/// ∇_H F = WᵀW H − Wᵀ X + 2λ H L
inline Matrix grad_h(const Matrix& w, const Matrix& h, const ProblemSpec& spec) {
  detail::check_factor_shapes(w, h, spec, "grad_h");
  Matrix g = matmul_tn(w, detail::residual(w, h, spec.x));
  if (spec.lambda != 0.0) g = axpy(g, 2.0 * spec.lambda, matmul(h, spec.graph->laplacian()));
  return g;
}

/// ‖H Hᵀ‖₂
inline double lipschitz_w(const Matrix& h) {
  return std::max(spectral_norm(matmul_nt(h, h)), kLipschitzFloor);
}

/// ‖WᵀW‖₂ + 2λ‖L‖₂
inline double lipschitz_h(const Matrix& w, const ProblemSpec& spec) {
  double lh = spectral_norm(matmul_tn(w, w));
  if (spec.lambda != 0.0) lh += 2.0 * spec.lambda * spec.laplacian_norm();
  return std::max(lh, kLipschitzFloor);
}

}  // namespace gnmf
