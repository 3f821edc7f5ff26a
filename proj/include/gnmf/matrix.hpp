#pragma once

// Dense row-major real matrix and the handful of kernels the factorization
// code needs. Every kernel runs a fixed loop order, so results are
// bit-identical for identical inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gnmf {

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class Matrix {
public:
  Matrix() = default;

  /// rows x cols of zeros.
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  /// Takes ownership of row-major data. Rejects size mismatches and
  /// non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                           " does not match " + shape_string(rows_, cols_));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw std::invalid_argument("Matrix: non-finite entry");
    }
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimensionError("Matrix: ragged initializer");
      for (double v : row) {
        if (!std::isfinite(v)) throw std::invalid_argument("Matrix: non-finite entry");
        data_.push_back(v);
      }
    }
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix constant(std::size_t rows, std::size_t cols, double value) {
    Matrix m(rows, cols);
    std::fill(m.data_.begin(), m.data_.end(), value);
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

}  // namespace detail

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

/// aᵀ·b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape() + " by " +
                         b.shape());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

/// a·bᵀ without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape() + " by transpose of " +
                         b.shape());
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a_row[k] * b_row[k];
      out(i, j) = s;
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "sub");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

inline Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.values()) v *= s;
  return out;
}

/// a + s·b
inline Matrix axpy(const Matrix& a, double s, const Matrix& b) {
  detail::require_same_shape(a, b, "axpy");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += s * bv[i];
  return out;
}

inline double trace(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("trace: matrix is not square (" + m.shape() + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

inline double squared_frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s;
}

inline double frobenius_norm(const Matrix& m) { return std::sqrt(squared_frobenius_norm(m)); }

inline double squared_distance(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "squared_distance");
  auto av = a.values();
  auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  return s;
}

inline double mean(const Matrix& m) {
  if (m.empty()) return 0.0;
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s / static_cast<double>(m.size());
}

inline double min_entry(const Matrix& m) {
  auto v = m.values();
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

inline double max_entry(const Matrix& m) {
  auto v = m.values();
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

struct SpectralNormOptions {
  double tol = 1e-9;
  std::size_t max_iter = 1000;
};

/// Largest singular value by power iteration on mᵀm.
///
/// The start vector is fixed: entries drawn from a SplitMix64 stream with a
/// constant seed, mapped into [0.5, 1.5]. A constant all-ones start would be
/// annihilated by graph Laplacians (L·1 = 0).
inline double spectral_norm(const Matrix& m, double tol, std::size_t max_iter) {
  if (m.empty()) throw DimensionError("spectral_norm: empty matrix");
  const std::size_t n = m.cols();

  std::vector<double> v(n);
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  for (auto& x : v) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    x = 0.5 + static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& e : x) e /= s;
    return s;
  };
  normalize(v);

  std::vector<double> mv(m.rows());
  std::vector<double> next(n);
  double estimate = 0.0;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += r[j] * v[j];
      mv[i] = s;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      const double s = mv[i];
      for (std::size_t j = 0; j < n; ++j) next[j] += r[j] * s;
    }
    // ‖mᵀm v‖ with ‖v‖ = 1 approaches the dominant eigenvalue of mᵀm.
    const double lambda = normalize(next);
    if (lambda == 0.0) return 0.0;
    v.swap(next);
    const bool done = std::abs(lambda - estimate) <= tol * lambda;
    estimate = lambda;
    if (done) break;
  }
  return std::sqrt(estimate);
}

inline double spectral_norm(const Matrix& m, SpectralNormOptions opts = {}) {
  return spectral_norm(m, opts.tol, opts.max_iter);
}

inline std::string to_string(const Matrix& m) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i == 0 ? "[[" : " [");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
    os << (i + 1 == m.rows() ? "]]" : "]\n");
  }
  return os.str();
}

}  // namespace gnmf
