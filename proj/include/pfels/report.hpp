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

#ifndef PFELS_REPORT_HPP
#define PFELS_REPORT_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfels/config.hpp"
#include "pfels/orchestrator.hpp"
#include "pfels/privacy.hpp"

namespace pfels {

inline constexpr const char* kArtifactVersion = "1.0.0";

inline constexpr const char* kRoundsCsvHeader =
    "round,algorithm,train_loss,test_metric,beta,regime,dp_feasible,energy_cum,"
    "subcarriers_cum,k,epsilon";

// Shortest round-trip decimal form; deterministic for a given double.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string rounds_csv(Algorithm algorithm, const std::vector<RoundRecord>& records) {
  std::string out = kRoundsCsvHeader;
  out += '\n';
  for (const RoundRecord& r : records) {
    out += std::to_string(r.round);
    out += ',';
    out += to_string(algorithm);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.test_metric);
    out += ',';
    out += format_double(r.beta);
    out += ',';
    out += r.regime;
    out += ',';
    out += r.dp_feasible ? "1" : "0";
    out += ',';
    out += format_double(r.energy_cum);
    out += ',';
    out += std::to_string(r.subcarriers_cum);
    out += ',';
    out += std::to_string(r.k);
    out += ',';
    out += format_double(r.epsilon);
    out += '\n';
  }
  return out;
}

// Write-to-temp then rename, so partially written files never appear under
// the final name.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// Final-state summary mirroring the per-algorithm comparison tables: final
// metric, per-round per-device symbol count, and total transmit energy.
inline nlohmann::json summary_json(const ExperimentConfig& cfg,
                                   const std::vector<RoundRecord>& records) {
  nlohmann::json j;
  j["algorithm"] = to_string(cfg.algorithm);
  j["rounds"] = cfg.rounds;
  j["population"] = cfg.population;
  j["cohort"] = cfg.cohort;
  j["seed"] = cfg.seed;
  const RoundRecord& last = records.back();
  j["final"] = {
      {"train_loss", last.train_loss},
      {"test_metric", last.test_metric},
      {"energy_total", last.energy_cum},
      {"subcarriers_total", last.subcarriers_cum},
  };
  j["subcarriers_per_round_per_device"] = last.k;
  j["slots_per_round_per_device"] =
      slots_needed(last.k, static_cast<std::uint64_t>(cfg.channel.subcarriers));
  j["compression"] = {{"ratio", cfg.compression}, {"kept_dim", last.k}};
  const PrivacySpec priv = cfg.privacy_spec();
  j["privacy"] = {
      {"epsilon", priv.epsilon},
      {"delta", priv.delta},
      {"cohort", priv.cohort},
      {"population", priv.population},
      {"per_round_dp_feasible_all", [&] {
         for (const auto& r : records) {
           if (!r.dp_feasible) return false;
         }
         return true;
       }()},
      {"epsilon_above_classic_range", classic_range_warning(cfg.epsilon)},
  };
  // Naive T-fold composition across rounds; the per-round analysis does not
  // compose, so this is labeled and kept out of any feasibility logic.
  j["privacy"]["basic_composition"] = {
      {"label", "basic composition, not from the per-round analysis"},
      {"epsilon_total", cfg.epsilon * cfg.rounds},
      {"delta_total", cfg.resolved_delta() * cfg.rounds},
  };
  return j;
}

struct RunOutputs {
  std::filesystem::path rounds_csv;
  std::filesystem::path summary_json;
  std::filesystem::path manifest_json;
};

// Execute one configured experiment and emit rounds CSV + summary + manifest
// into out_dir. The manifest embeds the resolved config text, so a run can
// be reproduced from the manifest alone.
inline RunOutputs run_and_emit(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RoundRecord> records = run_experiment(cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunOutputs outs;
  outs.rounds_csv = out_dir / "rounds.csv";
  outs.summary_json = out_dir / "summary.json";
  outs.manifest_json = out_dir / "manifest.json";

  atomic_write_file(outs.rounds_csv, rounds_csv(cfg.algorithm, records));
  atomic_write_file(outs.summary_json, summary_json(cfg, records).dump(2) + "\n");

  nlohmann::json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["seed"] = cfg.seed;
  manifest["config_text"] = to_kv_text(cfg);
  manifest["outputs"] = {outs.rounds_csv.filename().string(),
                         outs.summary_json.filename().string()};
  manifest["wall_clock_seconds"] = seconds;
  atomic_write_file(outs.manifest_json, manifest.dump(2) + "\n");
  return outs;
}

enum class SweepAxis { compression, epsilon };

inline const char* to_string(SweepAxis a) {
  return a == SweepAxis::compression ? "compression" : "epsilon";
}

inline constexpr const char* kSweepCsvHeader =
    "value,algorithm,final_train_loss,final_test_metric,energy_total,"
    "subcarriers_total,k,epsilon,seed";

// One independent run per axis value. Each point derives its seed from
// (base seed, value bits), so results do not depend on the order of the
// value list.
inline std::filesystem::path run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                       const std::vector<double>& values,
                                       const std::filesystem::path& out_dir) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  std::filesystem::create_directories(out_dir);
  std::string csv = kSweepCsvHeader;
  csv += '\n';
  for (double value : values) {
    ExperimentConfig cfg = base;
    if (axis == SweepAxis::compression) {
      cfg.compression = value;
    } else {
      cfg.epsilon = value;
    }
    std::uint64_t value_bits;
    static_assert(sizeof(value_bits) == sizeof(value));
    std::memcpy(&value_bits, &value, sizeof(value));
    cfg.seed = RngStream(base.seed).fork(stream_tag::kSweep).fork(value_bits).key();

    std::string label = std::string(to_string(axis)) + "_" + format_double(value);
    for (char& c : label) {
      if (c == '.') c = 'p';
      if (c == '+') c = '_';
    }
    const RunOutputs outs = run_and_emit(cfg, out_dir / label);
    std::ifstream summary(outs.summary_json);
    nlohmann::json j;
    summary >> j;

    csv += format_double(value);
    csv += ',';
    csv += to_string(cfg.algorithm);
    csv += ',';
    csv += format_double(j["final"]["train_loss"].get<double>());
    csv += ',';
    csv += format_double(j["final"]["test_metric"].get<double>());
    csv += ',';
    csv += format_double(j["final"]["energy_total"].get<double>());
    csv += ',';
    csv += std::to_string(j["final"]["subcarriers_total"].get<std::uint64_t>());
    csv += ',';
    csv += std::to_string(j["subcarriers_per_round_per_device"].get<std::uint64_t>());
    csv += ',';
    csv += format_double(cfg.epsilon);
    csv += ',';
    csv += std::to_string(cfg.seed);
    csv += '\n';
  }
  const std::filesystem::path summary_path = out_dir / "sweep_summary.csv";
  atomic_write_file(summary_path, csv);
  return summary_path;
}

}  // namespace pfels

#endif  // PFELS_REPORT_HPP
