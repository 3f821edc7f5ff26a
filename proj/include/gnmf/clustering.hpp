#pragma once

// k-means on the learned embedding and the clustering scores (NMI, ACC,
// relative reconstruction error).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnmf/matrix.hpp"
#include "gnmf/random.hpp"

namespace gnmf {

using Labels = std::vector<int>;

struct ClusteringResult {
  Labels labels;
  Matrix centroids;  // clusters x d
  double inertia = 0.0;
  std::size_t n_iter = 0;
  std::vector<double> inertia_history;  // after each assignment step
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
};

namespace detail {

inline double row_sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline Matrix kmeanspp_seed(const Matrix& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.rows(), d = pts.cols();
  Matrix c(k, d);
  auto copy_row = [&](std::size_t dst, std::size_t src) {
    std::copy(pts.row(src).begin(), pts.row(src).end(), c.row(dst).begin());
  };
  copy_row(0, static_cast<std::size_t>(rng.below(n)));
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t m = 1; m < k; ++m) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], row_sq_dist(pts.row(i), c.row(m - 1)));
      total += best[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= best[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    copy_row(m, pick);
  }
  return c;
}

/// Running means of the rows in each cluster; exact when a cluster's rows
/// are identical.
inline Matrix cluster_means(const Matrix& pts, const Labels& labels, std::size_t k,
                            std::vector<std::size_t>& counts) {
  Matrix c(k, pts.cols());
  counts.assign(k, 0);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    const double inv = 1.0 / static_cast<double>(++counts[l]);
    auto m = c.row(l);
    auto p = pts.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += (p[j] - m[j]) * inv;
  }
  return c;
}

/// Single-point moves (Hartigan) that strictly lower the inertia. Lloyd stops
/// at partitions where such moves still exist.
inline bool hartigan_pass(const Matrix& pts, Labels& labels, Matrix& centroids,
                          std::vector<std::size_t>& counts) {
  const std::size_t n = pts.rows(), k = centroids.rows();
  bool moved = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(labels[i]);
    if (counts[a] < 2) continue;
    const double na = static_cast<double>(counts[a]);
    const double remove_gain = na / (na - 1.0) * row_sq_dist(pts.row(i), centroids.row(a));
    std::size_t best = a;
    double best_delta = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (b == a) continue;
      const double nb = static_cast<double>(counts[b]);
      const double delta = nb / (nb + 1.0) * row_sq_dist(pts.row(i), centroids.row(b)) - remove_gain;
      if (delta < best_delta - 1e-12 * remove_gain) {
        best_delta = delta;
        best = b;
      }
    }
    if (best == a) continue;
    labels[i] = static_cast<int>(best);
    centroids = cluster_means(pts, labels, k, counts);
    moved = true;
  }
  return moved;
}

inline double inertia_of(const Matrix& pts, const Labels& labels, const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i)
    total += row_sq_dist(pts.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  return total;
}

/// Lloyd iterations from the given centroids, then Hartigan refinement.
inline ClusteringResult lloyd(const Matrix& pts, Matrix centroids, std::size_t max_iter) {
  const std::size_t n = pts.rows(), k = centroids.rows();
  ClusteringResult r;
  r.labels.assign(n, -1);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts;
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = row_sq_dist(pts.row(i), centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dd = row_sq_dist(pts.row(i), centroids.row(c));
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
      dist[i] = bd;
      inertia += bd;
    }
    r.inertia_history.push_back(inertia);
    r.n_iter = it + 1;
    if (!changed && it > 0) break;

    // An empty cluster takes the point farthest from its centroid.
    std::vector<std::size_t> sizes(k, 0);
    for (int l : r.labels) ++sizes[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      const auto far =
          static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      const auto old = static_cast<std::size_t>(r.labels[far]);
      if (sizes[old] < 2) continue;
      --sizes[old];
      ++sizes[c];
      r.labels[far] = static_cast<int>(c);
      dist[far] = 0.0;
    }
    Matrix next = cluster_means(pts, r.labels, k, counts);
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] == 0) std::copy(centroids.row(c).begin(), centroids.row(c).end(), next.row(c).begin());
    centroids = std::move(next);
  }

  centroids = cluster_means(pts, r.labels, k, counts);
  bool all_used = true;
  for (auto c : counts) all_used = all_used && c > 0;
  if (all_used) {
    for (std::size_t pass = 0; pass < max_iter && hartigan_pass(pts, r.labels, centroids, counts);
         ++pass) {
    }
  }
  r.inertia = inertia_of(pts, r.labels, centroids);
  if (r.inertia < r.inertia_history.back()) r.inertia_history.push_back(r.inertia);
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; rows of `points` are samples.
/// Returns the restart with the lowest inertia (earliest on ties).
inline ClusteringResult kmeans(const Matrix& points, std::size_t clusters, std::uint64_t seed,
                               KMeansOptions opts = {}) {
  if (clusters == 0 || clusters > points.rows()) {
    throw std::invalid_argument("kmeans: clusters = " + std::to_string(clusters) +
                                " outside [1, " + std::to_string(points.rows()) + "]");
  }
  if (opts.restarts == 0) throw std::invalid_argument("kmeans: restarts must be positive");
  Rng rng(seed);
  std::optional<ClusteringResult> best;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    auto res = detail::lloyd(points, detail::kmeanspp_seed(points, clusters, rng), opts.max_iter);
    if (!best || res.inertia < best->inertia) best = std::move(res);
  }
  return std::move(*best);
}

inline ClusteringResult kmeans(const Matrix& points, std::size_t clusters, std::uint64_t seed,
                               std::size_t restarts) {
  return kmeans(points, clusters, seed, KMeansOptions{restarts, 300});
}

namespace detail {

/// Relabels to 0..m-1 in order of first appearance.
inline std::vector<std::size_t> compact(const Labels& labels, std::size_t& count) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.try_emplace(l, ids.size()).first->second);
  count = ids.size();
  return out;
}

inline std::vector<std::vector<double>> contingency(const Labels& a, const Labels& b,
                                                    const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": label vectors differ in length (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
  if (a.empty()) throw std::invalid_argument(std::string(op) + ": empty label vectors");
  std::size_t na = 0, nb = 0;
  const auto ca = compact(a, na);
  const auto cb = compact(b, nb);
  std::vector<std::vector<double>> t(na, std::vector<double>(nb, 0.0));
  for (std::size_t i = 0; i < ca.size(); ++i) t[ca[i]][cb[i]] += 1.0;
  return t;
}

}  // namespace detail

/// 2·I(A,B) / (H(A) + H(B)) with natural logarithms. Two single-cluster
/// labelings score 1.
inline double nmi(const Labels& a, const Labels& b) {
  const auto t = detail::contingency(a, b, "nmi");
  const double n = static_cast<double>(a.size());
  std::vector<double> pa(t.size(), 0.0), pb(t[0].size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      pa[i] += t[i][j] / n;
      pb[j] += t[i][j] / n;
    }
  auto entropy = [](const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
      if (v > 0.0) h -= v * std::log(v);
    return h;
  };
  double mi = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      const double pij = t[i][j] / n;
      if (pij > 0.0) mi += pij * std::log(pij / (pa[i] * pb[j]));
    }
  const double denom = entropy(pa) + entropy(pb);
  if (denom <= 0.0) return 1.0;
  return std::clamp(2.0 * mi / denom, 0.0, 1.0);
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method,
/// shortest augmenting path form). Returns the column assigned to each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

/// Fraction of samples correctly labeled under the best one-to-one mapping
/// of predicted clusters onto true classes.
inline double acc(const Labels& pred, const Labels& truth) {
  const auto t = detail::contingency(pred, truth, "acc");
  const std::size_t m = std::max(t.size(), t[0].size());
  std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
  double top = 0.0;
  for (const auto& row : t)
    for (double c : row) top = std::max(top, c);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = (i < t.size() && j < t[0].size()) ? t[i][j] : 0.0;
      cost[i][j] = top - c;
    }
  const auto assign = hungarian(cost);
  double correct = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (assign[i] < t[0].size()) correct += t[i][assign[i]];
  return correct / static_cast<double>(pred.size());
}

/// ‖X − WH‖_F / ‖X‖_F
inline double relative_error(const Matrix& x, const Matrix& w, const Matrix& h) {
  const double nx = frobenius_norm(x);
  if (nx == 0.0) throw std::invalid_argument("relative_error: data matrix is zero");
  const Matrix wh = matmul(w, h);
  if (wh.rows() != x.rows() || wh.cols() != x.cols()) {
    throw DimensionError("relative_error: WH is " + wh.shape() + " but X is " + x.shape());
  }
  return std::sqrt(squared_distance(x, wh)) / nx;
}

struct MetricReport {
  std::optional<double> nmi;  // absent without ground-truth labels
  std::optional<double> acc;
  double relative_error = 0.0;
};

}  // namespace gnmf
