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

// Full-scale acceptance suite. Each case runs one validation check at its
// stated trial counts and tolerances and prints a single pass/fail line.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "pfels/validation.hpp"

namespace {

const std::vector<pfels::CheckResult>& results() {
  static const std::vector<pfels::CheckResult> r =
      pfels::run_validation(pfels::ValidationScale::full);
  return r;
}

void report(int id, double time_budget_seconds) {
  const pfels::CheckResult& r = results().at(static_cast<std::size_t>(id - 1));
  REQUIRE(r.id == id);
  std::printf("[%2d/12] %s  %-32s (%.2fs)  %s\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(),
              r.seconds, r.detail.c_str());
  std::fflush(stdout);
  CHECK(r.passed);
  CHECK(r.seconds < time_budget_seconds);
}

}  // namespace

TEST_CASE("criterion 1: exhaustive rand-k unbiasedness") { report(1, 5.0); }

TEST_CASE("criterion 2: exhaustive rand-k variance identity") { report(2, 5.0); }

TEST_CASE("criterion 3: neighboring-cohort sensitivity soundness") { report(3, 60.0); }

TEST_CASE("criterion 4: projected-update energy bound") { report(4, 10.0); }

TEST_CASE("criterion 5: closed-form power control vs grid oracle") { report(5, 30.0); }

TEST_CASE("criterion 6: transmit power within budget") { report(6, 60.0); }

TEST_CASE("criterion 7: degeneration equivalence") { report(7, 30.0); }

TEST_CASE("criterion 8: server-side noise calibration") { report(8, 30.0); }

TEST_CASE("criterion 9: directional accuracy regimes") { report(9, 300.0); }

TEST_CASE("criterion 10: energy and subcarrier ordering") { report(10, 300.0); }

TEST_CASE("criterion 11: compression trade-off in the bound") { report(11, 5.0); }

TEST_CASE("criterion 12: gradient correctness vs finite differences") { report(12, 10.0); }
