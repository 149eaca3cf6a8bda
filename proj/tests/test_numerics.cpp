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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pfels/numerics.hpp"

using namespace pfels;

TEST_CASE("l2 norm basics") {
  CHECK(l2_norm({3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(l2_norm(ModelVector(17, 0.0)) == 0.0);
  CHECK(l2_norm({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("clip_to_norm keeps short vectors and rescales long ones") {
  CHECK(clip_to_norm({3.0, 4.0}, 10.0) == ModelVector{3.0, 4.0});
  const ModelVector clipped = clip_to_norm({3.0, 4.0}, 1.0);
  CHECK(clipped[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(clipped[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(clip_to_norm({0.0, 0.0}, 2.5) == ModelVector{0.0, 0.0});
  CHECK_THROWS_AS(clip_to_norm({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_to_norm({1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("clip_to_norm is idempotent bit-for-bit and norm-bounded") {
  RngStream s(123);
  for (int rep = 0; rep < 300; ++rep) {
    RngStream sr = s.fork(rep);
    const std::size_t dim = 1 + sr.next_below(400);
    ModelVector v = gaussian_sample(sr, dim, 3.0);
    const double threshold = 0.01 + 2.0 * sr.next_double();
    const ModelVector once = clip_to_norm(v, threshold);
    const ModelVector twice = clip_to_norm(once, threshold);
    CHECK(once == twice);
    CHECK(l2_norm(once) <= threshold * (1.0 + 1e-12));
  }
}

TEST_CASE("gaussian_sample with zero std is the zero vector") {
  RngStream s(9);
  CHECK(gaussian_sample(s, 5, 0.0) == ModelVector(5, 0.0));
}

TEST_CASE("identical (seed, path) reproduces identical vectors") {
  RngStream a = RngStream(42).fork({3, 7, 1});
  RngStream b = RngStream(42).fork({3, 7, 1});
  CHECK(gaussian_sample(a, 64, 1.0) == gaussian_sample(b, 64, 1.0));
}

TEST_CASE("distinct paths give distinct sequences") {
  RngStream a = RngStream(42).fork(1);
  RngStream b = RngStream(42).fork(2);
  const ModelVector va = gaussian_sample(a, 16, 1.0);
  const ModelVector vb = gaussian_sample(b, 16, 1.0);
  CHECK(va != vb);
}

TEST_CASE("forking does not disturb the parent stream") {
  RngStream a(7);
  RngStream b(7);
  (void)a.fork(11);
  (void)a.fork(12);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("large-sample gaussian moments") {
  RngStream s(2718);
  const std::size_t n = 100000;
  const ModelVector v = gaussian_sample(s, n, 1.0);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("next_below is within range and roughly uniform") {
  RngStream s(555);
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 50000; ++i) counts[s.next_below(5)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(s.next_below(0), std::invalid_argument);
}

TEST_CASE("finite checks reject NaN and infinity") {
  CHECK(all_finite({1.0, -2.0, 3.0}));
  CHECK_FALSE(all_finite({1.0, std::numeric_limits<double>::quiet_NaN()}));
  CHECK_FALSE(all_finite({std::numeric_limits<double>::infinity()}));
  CHECK_THROWS_AS(assert_finite({std::numeric_limits<double>::infinity()}, "test"),
                  std::domain_error);
}

TEST_CASE("vector helpers") {
  ModelVector a{1.0, 2.0};
  add_in_place(a, {10.0, 20.0});
  CHECK(a == ModelVector{11.0, 22.0});
  axpy_in_place(a, -1.0, {1.0, 2.0});
  CHECK(a == ModelVector{10.0, 20.0});
  CHECK(scaled({1.0, -2.0}, 3.0) == ModelVector{3.0, -6.0});
  CHECK(subtracted({5.0, 5.0}, {2.0, 3.0}) == ModelVector{3.0, 2.0});
  CHECK(dot({1.0, 2.0}, {3.0, 4.0}) == 11.0);
  CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), std::invalid_argument);
}
