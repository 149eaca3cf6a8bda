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

#include "doctest.h"
#include "pfels/channel.hpp"

using namespace pfels;

TEST_CASE("degenerate truncation pins every gain") {
  GainDistribution dist;
  dist.mean = 0.02;
  dist.lo = 0.03;
  dist.hi = 0.03;
  const ChannelRealization ch = draw_channel(10, dist, 1.0, 4, RngStream(5));
  for (double g : ch.gains) CHECK(g == 0.03);
}

TEST_CASE("draw_channel validates its interval") {
  GainDistribution bad;
  bad.lo = 0.0;
  bad.hi = 0.1;
  CHECK_THROWS_AS(draw_channel(1, bad, 1.0, 1, RngStream(1)), std::invalid_argument);
  bad.lo = 0.2;
  CHECK_THROWS_AS(draw_channel(1, bad, 1.0, 1, RngStream(1)), std::invalid_argument);
}

TEST_CASE("same stream reproduces the same gains") {
  GainDistribution dist;
  const ChannelRealization a = draw_channel(32, dist, 1.0, 4, RngStream(17).fork(3));
  const ChannelRealization b = draw_channel(32, dist, 1.0, 4, RngStream(17).fork(3));
  CHECK(a.gains == b.gains);
}

TEST_CASE("truncated exponential gains have the expected mean") {
  // Exp(0.02) clamped into [1e-4, 0.1]: the clamp shifts the mean to about
  // 0.019866, still inside the checked window.
  GainDistribution dist;
  RngStream s(808);
  double sum = 0.0;
  const int n = 1000000;
  const ChannelRealization ch = draw_channel(n, dist, 1.0, 4, s);
  for (double g : ch.gains) {
    CHECK(g >= dist.lo);
    CHECK(g <= dist.hi);
    sum += g;
  }
  const double mean = sum / n;
  CHECK(mean > 0.018);
  CHECK(mean < 0.022);
}

TEST_CASE("aircomp with one clean device returns its signal") {
  const ModelVector x{1.0, -2.0, 3.0};
  const ModelVector y = aircomp_transmit({x}, {1.0}, 0.0, RngStream(1));
  CHECK(y == x);
}

TEST_CASE("aircomp superposes and cancels") {
  const ModelVector a{1.0, 2.0};
  const ModelVector b{-0.5, -1.0};
  const ModelVector y = aircomp_transmit({a, b}, {1.0, 2.0}, 0.0, RngStream(1));
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(0.0));
}

TEST_CASE("aircomp of r all-ones signals with gain g is r*g") {
  const std::size_t r = 7;
  const double g = 0.04;
  std::vector<ModelVector> signals(r, ModelVector(5, 1.0));
  const ModelVector y = aircomp_transmit(signals, std::vector<double>(r, g), 0.0, RngStream(2));
  for (double v : y) CHECK(v == doctest::Approx(r * g).epsilon(1e-14));
}

TEST_CASE("aircomp rejects malformed cohorts") {
  CHECK_THROWS_AS(aircomp_transmit({}, {}, 0.0, RngStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(aircomp_transmit({{1.0}, {1.0, 2.0}}, {1.0, 1.0}, 0.0, RngStream(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(aircomp_transmit({{1.0}}, {0.0}, 0.0, RngStream(1)), std::invalid_argument);
}

TEST_CASE("noise across rounds is uncorrelated") {
  RngStream root(999);
  const int rounds = 100000;
  double sum_xy = 0.0, sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_yy = 0.0;
  double prev = 0.0;
  for (int t = 0; t < rounds + 1; ++t) {
    RngStream s = root.fork(t);
    const double z = gaussian_sample(s, 1, 1.0)[0];
    if (t > 0) {
      sum_xy += prev * z;
      sum_x += prev;
      sum_y += z;
      sum_xx += prev * prev;
      sum_yy += z * z;
    }
    prev = z;
  }
  const double n = rounds;
  const double corr = (sum_xy - sum_x * sum_y / n) /
                      std::sqrt((sum_xx - sum_x * sum_x / n) * (sum_yy - sum_y * sum_y / n));
  CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("energy ledger accumulates ||x||^2 and symbol counts") {
  EnergyLedger ledger(3);
  ledger.record(1, {0.0, 0.0});
  CHECK(ledger.energy(1) == 0.0);
  CHECK(ledger.subcarrier_uses(1) == 2);
  ledger.record(1, {3.0, 4.0});
  CHECK(ledger.energy(1) == doctest::Approx(25.0));
  CHECK(ledger.subcarrier_uses(1) == 4);
  ledger.record(1, {3.0, 4.0});
  CHECK(ledger.energy(1) == doctest::Approx(50.0));
  CHECK(ledger.total_energy() == doctest::Approx(50.0));
  CHECK(ledger.total_subcarrier_uses() == 6);
  CHECK(ledger.energy(0) == 0.0);
}

TEST_CASE("slots_needed is the ceiling of k over K") {
  CHECK(slots_needed(600, 600) == 1);
  CHECK(slots_needed(601, 600) == 2);
  CHECK(slots_needed(0, 600) == 0);
  CHECK(slots_needed(1, 1) == 1);
  CHECK_THROWS_AS(slots_needed(5, 0), std::invalid_argument);
}
