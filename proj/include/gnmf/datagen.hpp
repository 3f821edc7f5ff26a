#pragma once

// Synthetic benchmark: Gaussian clusters in the leading rows, pure-noise
// rows at the bottom, plus a block-structured adjacency matching the
// clusters.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnmf/clustering.hpp"
#include "gnmf/matrix.hpp"
#include "gnmf/random.hpp"

namespace gnmf {

struct SyntheticSpec {
  std::size_t samples_per_cluster = 50;
  std::size_t signal_features = 17;
  std::size_t noise_rows = 3;
  std::vector<double> means{-2.0, 0.0, 2.0};
  std::uint64_t seed = 0;

  std::size_t clusters() const noexcept { return means.size(); }
  std::size_t samples() const noexcept { return samples_per_cluster * means.size(); }
  std::size_t features() const noexcept { return signal_features + noise_rows; }
};

struct SyntheticData {
  Matrix x;  // features x samples, entries in [0, 1]
  Labels labels;
};

/// Columns of cluster c are N(means[c], I) in the signal rows; noise rows are
/// N(0, 1). The whole matrix is then min-max scaled with one global min and
/// range, and each noise row has its columns permuted independently.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.means.empty() || spec.samples_per_cluster == 0 || spec.features() == 0) {
    throw std::invalid_argument("generate_synthetic: empty dataset requested");
  }
  const std::size_t p = spec.features(), n = spec.samples();
  Rng rng(spec.seed);
  SyntheticData out{Matrix(p, n), Labels(n)};
  Matrix& x = out.x;
  for (std::size_t c = 0; c < spec.clusters(); ++c) {
    for (std::size_t s = 0; s < spec.samples_per_cluster; ++s) {
      const std::size_t j = c * spec.samples_per_cluster + s;
      out.labels[j] = static_cast<int>(c);
      for (std::size_t i = 0; i < spec.signal_features; ++i) x(i, j) = rng.normal(spec.means[c], 1.0);
    }
  }
  for (std::size_t i = spec.signal_features; i < p; ++i)
    for (std::size_t j = 0; j < n; ++j) x(i, j) = rng.normal();

  const double lo = min_entry(x);
  const double range = max_entry(x) - lo;
  for (double& v : x.values()) v = range > 0.0 ? (v - lo) / range : 0.0;

  std::vector<std::size_t> perm(n);
  std::vector<double> tmp(n);
  for (std::size_t i = spec.signal_features; i < p; ++i) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm.begin(), perm.end());
    auto row = x.row(i);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = row[perm[j]];
    std::copy(tmp.begin(), tmp.end(), row.begin());
  }
  return out;
}

struct BlockAdjacencySpec {
  std::vector<std::size_t> block_sizes{50, 50, 50};
  double within_block_density = 0.5;
  double weight_low = 0.5;
  double weight_high = 1.0;
  std::uint64_t seed = 0;

  std::size_t nodes() const noexcept {
    return std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
  }

  void validate() const {
    if (block_sizes.empty()) throw std::invalid_argument("BlockAdjacencySpec: no blocks");
    for (auto b : block_sizes)
      if (b == 0) throw std::invalid_argument("BlockAdjacencySpec: block sizes must be positive");
    if (!(within_block_density > 0.0 && within_block_density <= 1.0))
      throw std::invalid_argument("BlockAdjacencySpec: density must lie in (0, 1]");
    if (!(weight_low > 0.0 && weight_low <= weight_high))
      throw std::invalid_argument("BlockAdjacencySpec: need 0 < weight_low <= weight_high");
  }
};

/// Upper-triangular entries inside each diagonal block are nonzero with
/// probability `within_block_density` and uniform in [weight_low,
/// weight_high]; the lower triangle mirrors them. Off-block entries and the
/// diagonal stay zero.
inline Matrix generate_block_adjacency(const BlockAdjacencySpec& spec) {
  spec.validate();
  const std::size_t n = spec.nodes();
  Rng rng(spec.seed);
  Matrix a(n, n);
  std::size_t start = 0;
  for (std::size_t size : spec.block_sizes) {
    for (std::size_t j = start; j < start + size; ++j)
      for (std::size_t l = j + 1; l < start + size; ++l) {
        if (rng.uniform() >= spec.within_block_density) continue;
        const double w = rng.uniform(spec.weight_low, spec.weight_high);
        a(j, l) = w;
        a(l, j) = w;
      }
    start += size;
  }
  return a;
}

}  // namespace gnmf
