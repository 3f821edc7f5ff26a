#pragma once

// Sample-similarity graphs: kNN adjacency under the three weighting schemes,
// degree matrix and Laplacian L = D - A.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gnmf/matrix.hpp"

namespace gnmf {

struct ZeroOne {};

/// exp(-‖x_j - x_l‖² / 2σ²). Without an explicit sigma the median distance
/// over connected pairs is used.
struct GaussianKernel {
  std::optional<double> sigma;
};

/// x_jᵀ x_l. May produce negative weights on data with mixed signs.
struct DotProduct {};

using WeightScheme = std::variant<ZeroOne, GaussianKernel, DotProduct>;

inline std::string scheme_name(const WeightScheme& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroOne>) return "zero_one";
        else if constexpr (std::is_same_v<T, GaussianKernel>) return "gaussian";
        else return "dot_product";
      },
      s);
}

inline constexpr std::size_t kDefaultNeighbors = 5;

class GraphModel {
public:
  /// Wraps a symmetric, zero-diagonal adjacency matrix.
  GraphModel(Matrix adjacency, WeightScheme scheme, std::optional<std::size_t> neighbors)
      : adjacency_(std::move(adjacency)), scheme_(scheme), neighbors_(neighbors) {
    const std::size_t n = adjacency_.rows();
    degree_ = Matrix(n, n);
    laplacian_ = scale(adjacency_, -1.0);
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (double a : adjacency_.row(j)) d += a;
      degree_(j, j) = d;
      laplacian_(j, j) += d;
    }
    laplacian_norm_ = n == 0 ? 0.0 : spectral_norm(laplacian_);
  }

  const Matrix& adjacency() const noexcept { return adjacency_; }
  const Matrix& degree() const noexcept { return degree_; }
  const Matrix& laplacian() const noexcept { return laplacian_; }
  const WeightScheme& scheme() const noexcept { return scheme_; }
  /// kNN parameter; empty for user-supplied adjacency.
  std::optional<std::size_t> neighbors() const noexcept { return neighbors_; }
  std::size_t nodes() const noexcept { return adjacency_.rows(); }
  /// ‖L‖₂, computed once at construction.
  double laplacian_norm() const noexcept { return laplacian_norm_; }

private:
  Matrix adjacency_;
  Matrix degree_;
  Matrix laplacian_;
  WeightScheme scheme_;
  std::optional<std::size_t> neighbors_;
  double laplacian_norm_ = 0.0;
};

inline GraphModel from_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("from_adjacency: adjacency must be square, got " + a.shape());
  }
  constexpr double tol = 1e-12;
  const std::size_t n = a.rows();
  Matrix sym(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(a(j, j)) > tol) {
      throw std::invalid_argument("from_adjacency: nonzero diagonal entry at " +
                                  std::to_string(j));
    }
    for (std::size_t l = j + 1; l < n; ++l) {
      if (std::abs(a(j, l) - a(l, j)) > tol) {
        throw std::invalid_argument("from_adjacency: asymmetric entries at (" + std::to_string(j) +
                                    ", " + std::to_string(l) + ")");
      }
      const double w = 0.5 * (a(j, l) + a(l, j));
      sym(j, l) = w;
      sym(l, j) = w;
    }
  }
  return GraphModel(std::move(sym), ZeroOne{}, std::nullopt);
}

namespace detail {

inline Matrix column_sq_distances(const Matrix& x) {
  const std::size_t n = x.cols();
  Matrix d(n, n);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = j + 1; l < n; ++l) {
        const double diff = r[j] - r[l];
        d(j, l) += diff * diff;
      }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = j + 1; l < n; ++l) d(l, j) = d(j, l);
  return d;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// kNN graph over the columns of x. j and l are connected when either is among
/// the other's `neighbors` nearest columns (Euclidean distance, ties to the
/// lower index). For the nonnegative schemes this is the max(a_jl, a_lj)
/// symmetrization of the directed kNN weights.
inline GraphModel build_knn_graph(const Matrix& x, std::size_t neighbors,
                                  WeightScheme scheme = GaussianKernel{}) {
  const std::size_t n = x.cols();
  if (neighbors == 0 || neighbors >= n) {
    throw std::invalid_argument("build_knn_graph: neighbors must be in [1, n), got " +
                                std::to_string(neighbors) + " with n = " + std::to_string(n));
  }
  if (const auto* g = std::get_if<GaussianKernel>(&scheme); g && g->sigma && !(*g->sigma > 0.0)) {
    throw std::invalid_argument("build_knn_graph: gaussian sigma must be positive");
  }

  const Matrix sq = detail::column_sq_distances(x);
  std::vector<char> connected(n * n, 0);
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < n; ++j) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(j));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(neighbors),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return sq(j, a) < sq(j, b) || (sq(j, a) == sq(j, b) && a < b);
                      });
    for (std::size_t t = 0; t < neighbors; ++t) {
      connected[j * n + order[t]] = 1;
      connected[order[t] * n + j] = 1;
    }
  }

  if (auto* g = std::get_if<GaussianKernel>(&scheme); g && !g->sigma) {
    std::vector<double> dists;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = j + 1; l < n; ++l)
        if (connected[j * n + l]) dists.push_back(std::sqrt(sq(j, l)));
    const double med = detail::median(std::move(dists));
    g->sigma = med > 0.0 ? med : 1.0;
  }

  Matrix a(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = j + 1; l < n; ++l) {
      if (!connected[j * n + l]) continue;
      double w = 0.0;
      if (std::holds_alternative<ZeroOne>(scheme)) {
        w = 1.0;
      } else if (const auto* g = std::get_if<GaussianKernel>(&scheme)) {
        w = std::exp(-sq(j, l) / (2.0 * *g->sigma * *g->sigma));
      } else {
        for (std::size_t i = 0; i < x.rows(); ++i) w += x(i, j) * x(i, l);
      }
      a(j, l) = w;
      a(l, j) = w;
    }
  }
  return GraphModel(std::move(a), scheme, neighbors);
}

/// Tr(H L Hᵀ), evaluated row by row of H.
inline double laplacian_quadratic(const Matrix& h, const GraphModel& g) {
  const Matrix& l = g.laplacian();
  if (h.cols() != l.rows()) {
    throw DimensionError("laplacian_quadratic: H is " + h.shape() + " but graph has " +
                         std::to_string(l.rows()) + " nodes");
  }
  const std::size_t n = h.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    auto hr = h.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (hr[j] == 0.0) continue;
      auto lr = l.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += lr[k] * hr[k];
      total += hr[j] * s;
    }
  }
  return total;
}

}  // namespace gnmf
