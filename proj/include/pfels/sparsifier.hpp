// Copyright 2026 The PFELS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PFELS_SPARSIFIER_HPP
#define PFELS_SPARSIFIER_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pfels/numerics.hpp"

namespace pfels {

// Rand-k coordinate selection. The k x d selection matrix is never
// materialized; the sorted index set omega is the whole representation.
struct RandKProjection {
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<std::size_t> omega;  // strictly increasing, size k, entries < d

  double keep_fraction() const { return static_cast<double>(k) / static_cast<double>(d); }
  // lambda_k = 1 - k/d, the variance factor of the selection.
  double lambda() const { return 1.0 - keep_fraction(); }
};

// Uniform draw from all C(d, k) index subsets via partial Fisher-Yates.
// Server and clients regenerate the same omega from a shared (seed, round)
// stream, so the selection never has to be transmitted.
inline RandKProjection generate_projection(std::size_t d, std::size_t k, RngStream stream) {
  if (k < 1 || k > d) {
    throw std::invalid_argument("generate_projection: need 1 <= k <= d");
  }
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t swap_at = j + static_cast<std::size_t>(stream.next_below(d - j));
    std::swap(idx[j], idx[swap_at]);
  }
  RandKProjection p;
  p.d = d;
  p.k = k;
  p.omega.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(p.omega.begin(), p.omega.end());
  return p;
}

// (v[omega_1], ..., v[omega_k]).
inline ModelVector project(const RandKProjection& p, const ModelVector& v) {
  if (v.size() != p.d) throw std::invalid_argument("project: vector length != d");
  ModelVector out(p.k);
  for (std::size_t m = 0; m < p.k; ++m) out[m] = v[p.omega[m]];
  return out;
}

// d-vector with w at positions omega and zeros elsewhere.
inline ModelVector embed_transpose(const RandKProjection& p, const ModelVector& w) {
  if (w.size() != p.k) throw std::invalid_argument("embed_transpose: vector length != k");
  ModelVector out(p.d, 0.0);
  for (std::size_t m = 0; m < p.k; ++m) out[p.omega[m]] = w[m];
  return out;
}

namespace detail {

inline constexpr std::size_t kEnumerationMaxDim = 12;

// Visit every k-subset of [0, d) in lexicographic order.
inline void for_each_subset(std::size_t d, std::size_t k,
                            const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> subset(k);
  std::iota(subset.begin(), subset.end(), std::size_t{0});
  while (true) {
    visit(subset);
    // Advance to the next combination.
    std::size_t i = k;
    while (i > 0 && subset[i - 1] == d - k + i - 1) --i;
    if (i == 0) break;
    ++subset[i - 1];
    for (std::size_t j = i; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }
}

}  // namespace detail

// Exhaustive mean of embed_transpose(project(v)) over all C(d, k) subsets.
// Equals (k/d) v; kept as an enumeration so tests can verify that identity
// through a route independent of the sampled projection path.
inline ModelVector expected_reconstruction_oracle(std::size_t d, std::size_t k,
                                                  const ModelVector& v) {
  if (d > detail::kEnumerationMaxDim) {
    throw std::invalid_argument("expected_reconstruction_oracle: d too large to enumerate");
  }
  if (k < 1 || k > d) throw std::invalid_argument("expected_reconstruction_oracle: bad k");
  if (v.size() != d) throw std::invalid_argument("expected_reconstruction_oracle: length mismatch");
  ModelVector sum(d, 0.0);
  std::size_t count = 0;
  detail::for_each_subset(d, k, [&](const std::vector<std::size_t>& subset) {
    for (std::size_t j : subset) sum[j] += v[j];
    ++count;
  });
  for (double& x : sum) x /= static_cast<double>(count);
  return sum;
}

// Exhaustive E ||embed(project(v)) - v||^2 over all subsets; equals
// (1 - k/d) ||v||^2.
inline double variance_oracle(std::size_t d, std::size_t k, const ModelVector& v) {
  if (d > detail::kEnumerationMaxDim) {
    throw std::invalid_argument("variance_oracle: d too large to enumerate");
  }
  if (k < 1 || k > d) throw std::invalid_argument("variance_oracle: bad k");
  if (v.size() != d) throw std::invalid_argument("variance_oracle: length mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  std::vector<bool> kept(d);
  detail::for_each_subset(d, k, [&](const std::vector<std::size_t>& subset) {
    kept.assign(d, false);
    for (std::size_t j : subset) kept[j] = true;
    // The residual is exactly the dropped coordinates.
    double dropped = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!kept[j]) dropped += v[j] * v[j];
    }
    sum += dropped;
    ++count;
  });
  return sum / static_cast<double>(count);
}

}  // namespace pfels

#endif  // PFELS_SPARSIFIER_HPP
