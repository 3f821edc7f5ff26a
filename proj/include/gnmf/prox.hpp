#pragma once

// Euclidean projections onto the two constraint sets:
//   H-block: the nonnegative orthant,
//   W-block: {W >= 0, at most k nonzero rows}, computed as RS_k(P+(W)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnmf/matrix.hpp"

namespace gnmf {

struct RowSelection {
  std::vector<std::size_t> kept_rows;  // ascending
  std::vector<double> row_norms;       // ℓ2 norm of every row after P+
};

struct RowSparseProjection {
  Matrix matrix;
  RowSelection selection;
};

inline Matrix project_nonneg(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

/// Number of rows with nonzero ℓ2 norm.
inline std::size_t l20_norm(const Matrix& m) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    if (std::any_of(r.begin(), r.end(), [](double v) { return v != 0.0; })) ++count;
  }
  return count;
}

/// Keeps the k rows of largest norm after clipping negatives; equal norms
/// resolve to the lower row index.
inline RowSparseProjection project_row_sparse(const Matrix& m, std::size_t k) {
  const std::size_t p = m.rows();
  if (k == 0 || k > p) {
    throw std::invalid_argument("project_row_sparse: k = " + std::to_string(k) +
                                " outside [1, " + std::to_string(p) + "]");
  }
  RowSparseProjection out{project_nonneg(m), {}};
  std::vector<double> sq(p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (double v : out.matrix.row(i)) sq[i] += v * v;

  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto larger = [&](std::size_t a, std::size_t b) {
    return sq[a] > sq[b] || (sq[a] == sq[b] && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                   larger);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::vector<char> keep(p, 0);
  for (std::size_t i : idx) keep[i] = 1;
  for (std::size_t i = 0; i < p; ++i)
    if (!keep[i])
      for (double& v : out.matrix.row(i)) v = 0.0;

  out.selection.kept_rows = std::move(idx);
  out.selection.row_norms.resize(p);
  std::transform(sq.begin(), sq.end(), out.selection.row_norms.begin(),
                 [](double s) { return std::sqrt(s); });
  return out;
}

}  // namespace gnmf
