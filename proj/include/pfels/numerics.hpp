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

#ifndef PFELS_NUMERICS_HPP
#define PFELS_NUMERICS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pfels {

// Flat parameter / update / gradient vector. All entries must stay finite;
// producers check with assert_finite at module boundaries.
using ModelVector = std::vector<double>;

namespace detail {

inline constexpr std::uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix_scramble(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic hierarchical random stream. A stream is identified by a
// 64-bit key derived from (master seed, path of labels); equal keys produce
// equal output sequences, and forking never perturbs the parent. The
// generator is xoshiro256++ seeded from the key, so distinct streams live in
// distinct slices of a 2^256-period sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed)
      : key_(detail::splitmix_scramble(master_seed + detail::kSplitMixGamma)) {
    seed_state();
  }

  // Derive a child stream; side-effect free on the parent.
  RngStream fork(std::uint64_t label) const {
    std::uint64_t child =
        detail::splitmix_scramble(key_ ^ detail::splitmix_scramble(
                                             label + detail::kSplitMixGamma));
    return RngStream(child, Forked{});
  }

  RngStream fork(std::initializer_list<std::uint64_t> path) const {
    RngStream s = *this;
    for (std::uint64_t label : path) s = s.fork(label);
    return s;
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be > 0");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return x % bound;
  }

  // Standard normal via Box-Muller (cosine branch). Two uniforms per draw,
  // no cached spare, so the call pattern never changes the mapping from
  // stream position to output.
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  struct Forked {};
  RngStream(std::uint64_t key, Forked) : key_(key) { seed_state(); }

  void seed_state() {
    std::uint64_t s = key_;
    for (auto& word : state_) {
      s += detail::kSplitMixGamma;
      word = detail::splitmix_scramble(s);
    }
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
};

// Purpose labels for the top level of every stream path. Rounds, client ids
// and other indices fork below these, so no two purposes ever share a stream.
namespace stream_tag {
inline constexpr std::uint64_t kCohort = 1;
inline constexpr std::uint64_t kRandK = 2;
inline constexpr std::uint64_t kMinibatch = 3;
inline constexpr std::uint64_t kChannelGain = 4;
inline constexpr std::uint64_t kChannelNoise = 5;
inline constexpr std::uint64_t kDpNoise = 6;
inline constexpr std::uint64_t kDataGen = 7;
inline constexpr std::uint64_t kModelInit = 8;
inline constexpr std::uint64_t kBudget = 9;
inline constexpr std::uint64_t kSweep = 10;
inline constexpr std::uint64_t kValidate = 11;
}  // namespace stream_tag

inline bool all_finite(const ModelVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void assert_finite(const ModelVector& v, const char* where) {
  if (!all_finite(v)) {
    throw std::domain_error(std::string("non-finite value produced in ") + where);
  }
}

// Sum of squares with Neumaier compensation; keeps the norm's relative error
// at a few ulps independent of length, which the bit-for-bit clip idempotence
// contract relies on.
inline double l2_norm_sq(const ModelVector& v) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double term = x * x;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

inline double l2_norm(const ModelVector& v) { return std::sqrt(l2_norm_sq(v)); }

inline double dot(const ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// v / max(1, ||v||/threshold). Inputs already within threshold*(1 + 64 eps)
// are returned unchanged, which makes the operation idempotent bit-for-bit
// and keeps the output norm within machine-epsilon slack of the threshold.
inline ModelVector clip_to_norm(const ModelVector& v, double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("clip_to_norm: threshold must be positive");
  }
  const double norm = l2_norm(v);
  constexpr double kSlack = 64.0 * std::numeric_limits<double>::epsilon();
  if (norm <= threshold * (1.0 + kSlack)) return v;
  const double scale = threshold / norm;
  ModelVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
  return out;
}

inline ModelVector& add_in_place(ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline ModelVector& axpy_in_place(ModelVector& a, double c, const ModelVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += c * b[i];
  return a;
}

inline ModelVector scaled(const ModelVector& v, double c) {
  ModelVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = c * v[i];
  return out;
}

inline ModelVector subtracted(const ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: length mismatch");
  ModelVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// i.i.d. N(0, std^2) entries; std = 0 yields the zero vector without
// consuming the stream.
inline ModelVector gaussian_sample(RngStream& stream, std::size_t dim, double std_dev) {
  if (std_dev < 0.0) throw std::invalid_argument("gaussian_sample: std must be >= 0");
  ModelVector out(dim, 0.0);
  if (std_dev == 0.0) return out;
  for (std::size_t i = 0; i < dim; ++i) out[i] = std_dev * stream.next_gaussian();
  return out;
}

}  // namespace pfels

#endif  // PFELS_NUMERICS_HPP
