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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pfels/config.hpp"
#include "pfels/report.hpp"

using namespace pfels;

namespace {

const char* kMinimalConfig =
    "algorithm = pfels\n"
    "rounds = 3\n"
    "population = 8\n"
    "cohort = 3\n";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pfels_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal config parses with documented defaults") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  const ExperimentConfig cfg = experiment_config_from(kv);
  CHECK(cfg.algorithm == Algorithm::pfels);
  CHECK(cfg.rounds == 3);
  CHECK(cfg.population == 8);
  CHECK(cfg.cohort == 3);
  CHECK(cfg.compression == 1.0);
  CHECK(cfg.channel.gains.mean == 0.02);
  CHECK(cfg.channel.noise_std == 1.0);
  CHECK(cfg.resolved_delta() == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("missing required fields are named in the error") {
  KvConfig kv = KvConfig::parse_string("rounds = 3\npopulation = 8\ncohort = 3\n");
  try {
    (void)experiment_config_from(kv);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("algorithm") != std::string::npos);
  }
}

TEST_CASE("unknown and malformed fields are rejected") {
  {
    KvConfig kv = KvConfig::parse_string(std::string(kMinimalConfig) + "extra.key = 1\n");
    CHECK_THROWS_AS((void)experiment_config_from(kv), ConfigError);
  }
  CHECK_THROWS_AS(KvConfig::parse_string("algorithm = pfels\nalgorithm = fedavg\n"), ConfigError);
  CHECK_THROWS_AS(KvConfig::parse_string("no equals sign here\n"), ConfigError);
  {
    KvConfig kv = KvConfig::parse_string(std::string(kMinimalConfig) + "compression = abc\n");
    CHECK_THROWS_AS((void)experiment_config_from(kv), ConfigError);
  }
  {
    KvConfig kv = KvConfig::parse_string(std::string(kMinimalConfig) + "data.task = cats\n");
    CHECK_THROWS_AS((void)experiment_config_from(kv), ConfigError);
  }
}

TEST_CASE("comments, blank lines, and inf values parse") {
  KvConfig kv = KvConfig::parse_string(
      "# experiment\n"
      "algorithm = wfl_p   # aircomp baseline\n"
      "\n"
      "rounds = 2\n"
      "population = 4\n"
      "cohort = 2\n"
      "privacy.epsilon = inf\n");
  const ExperimentConfig cfg = experiment_config_from(kv);
  CHECK(cfg.algorithm == Algorithm::wfl_p);
  CHECK(std::isinf(cfg.epsilon));
}

TEST_CASE("config round-trips through its canonical dump") {
  KvConfig kv = KvConfig::parse_string(
      "algorithm = wfl_pdp\nrounds = 7\npopulation = 12\ncohort = 5\n"
      "compression = 0.25\nseed = 99\ntrain.momentum = 0.9\n"
      "data.heterogeneity = 0.6\nprivacy.epsilon = 2.5\n");
  const ExperimentConfig cfg = experiment_config_from(kv);
  KvConfig round = KvConfig::parse_string(to_kv_text(cfg));
  const ExperimentConfig cfg2 = experiment_config_from(round);
  CHECK(cfg2.algorithm == cfg.algorithm);
  CHECK(cfg2.rounds == cfg.rounds);
  CHECK(cfg2.compression == cfg.compression);
  CHECK(cfg2.seed == cfg.seed);
  CHECK(cfg2.train.momentum == cfg.train.momentum);
  CHECK(cfg2.data.heterogeneity == cfg.data.heterogeneity);
  CHECK(cfg2.epsilon == cfg.epsilon);
}

TEST_CASE("rounds CSV has the pinned schema and one row per round") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  const ExperimentConfig cfg = experiment_config_from(kv);
  const auto records = run_experiment(cfg);
  const std::string csv = rounds_csv(cfg.algorithm, records);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "round,algorithm,train_loss,test_metric,beta,regime,dp_feasible,energy_cum,"
        "subcarriers_cum,k,epsilon");
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 3);
  CHECK(csv.find("\r") == std::string::npos);  // LF only
}

TEST_CASE("same seed emits byte-identical artifacts") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  const ExperimentConfig cfg = experiment_config_from(kv);
  const auto dir_a = fresh_dir("bytes_a");
  const auto dir_b = fresh_dir("bytes_b");
  run_and_emit(cfg, dir_a);
  run_and_emit(cfg, dir_b);
  CHECK(slurp(dir_a / "rounds.csv") == slurp(dir_b / "rounds.csv"));
  CHECK(slurp(dir_a / "summary.json") == slurp(dir_b / "summary.json"));
}

TEST_CASE("manifest reproduces the run it describes") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  const ExperimentConfig cfg = experiment_config_from(kv);
  const auto dir = fresh_dir("manifest");
  run_and_emit(cfg, dir);
  std::ifstream mf(dir / "manifest.json");
  nlohmann::json manifest;
  mf >> manifest;
  CHECK(manifest["artifact_version"] == kArtifactVersion);
  CHECK(manifest["seed"] == cfg.seed);

  KvConfig again = KvConfig::parse_string(manifest["config_text"].get<std::string>());
  const ExperimentConfig cfg2 = experiment_config_from(again);
  const auto dir2 = fresh_dir("manifest_redo");
  run_and_emit(cfg2, dir2);
  CHECK(slurp(dir / "rounds.csv") == slurp(dir2 / "rounds.csv"));
}

TEST_CASE("sweep emits one row per value, independent of order") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  ExperimentConfig cfg = experiment_config_from(kv);
  cfg.rounds = 2;
  const auto dir_fwd = fresh_dir("sweep_fwd");
  const auto dir_rev = fresh_dir("sweep_rev");
  run_sweep(cfg, SweepAxis::epsilon, {0.5, 1.0}, dir_fwd);
  run_sweep(cfg, SweepAxis::epsilon, {1.0, 0.5}, dir_rev);

  const auto parse_rows = [](const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(line);
    }
    return rows;
  };
  auto fwd = parse_rows(slurp(dir_fwd / "sweep_summary.csv"));
  auto rev = parse_rows(slurp(dir_rev / "sweep_summary.csv"));
  REQUIRE(fwd.size() == 2);
  REQUIRE(rev.size() == 2);
  std::sort(fwd.begin(), fwd.end());
  std::sort(rev.begin(), rev.end());
  CHECK(fwd == rev);
}

TEST_CASE("uncompressed sweep point transmits the full dimension every round") {
  KvConfig kv = KvConfig::parse_string(kMinimalConfig);
  ExperimentConfig cfg = experiment_config_from(kv);
  cfg.rounds = 4;
  const auto dir = fresh_dir("sweep_full_dim");
  run_sweep(cfg, SweepAxis::compression, {1.0}, dir);
  const std::string csv = slurp(dir / "sweep_summary.csv");
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  // subcarriers_total is column 6 (1-based), k column 7
  std::vector<std::string> cells;
  std::istringstream rowin(row);
  std::string cell;
  while (std::getline(rowin, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 9);
  const Model probe = make_model(cfg);
  const std::uint64_t d = probe.dim();
  CHECK(cells[5] == std::to_string(d * cfg.cohort * static_cast<std::uint64_t>(cfg.rounds)));
  CHECK(cells[6] == std::to_string(d));
}

TEST_CASE("format_double round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, 12345.6789, 1e-300, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
