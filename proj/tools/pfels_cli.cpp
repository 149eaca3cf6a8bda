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

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pfels/config.hpp"
#include "pfels/report.hpp"
#include "pfels/validation.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

pfels::ExperimentConfig load_config(const CommonArgs& args) {
  pfels::ExperimentConfig cfg = pfels::load_experiment_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of differentially private wireless federated learning "
               "with over-the-air aggregation"};
  app.require_subcommand(1);

  CommonArgs args;

  CLI::App* run = app.add_subcommand("run", "Execute one configured experiment");
  run->add_option("--config", args.config_path, "Experiment config file")
      ->envname("PFELS_CONFIG")
      ->required();
  run->add_option("--out", args.out_dir, "Output directory")->envname("PFELS_OUT");
  run->add_option("--seed", args.seed, "Master seed override")
      ->envname("PFELS_SEED")
      ->each([&](const std::string&) { args.seed_set = true; });

  std::string axis = "compression";
  std::vector<double> values;
  CLI::App* sweep = app.add_subcommand("sweep", "Run one experiment per axis value");
  sweep->add_option("--config", args.config_path, "Experiment config file")
      ->envname("PFELS_CONFIG")
      ->required();
  sweep->add_option("--out", args.out_dir, "Output directory")->envname("PFELS_OUT");
  sweep->add_option("--seed", args.seed, "Master seed override")
      ->envname("PFELS_SEED")
      ->each([&](const std::string&) { args.seed_set = true; });
  sweep->add_option("--axis", axis, "Sweep axis: compression|epsilon")
      ->envname("PFELS_AXIS")
      ->check(CLI::IsMember({"compression", "epsilon"}));
  sweep->add_option("--values", values, "Axis values (space separated)")
      ->envname("PFELS_VALUES")
      ->required()
      ->expected(-1);

  std::string scale = "quick";
  std::uint64_t validate_seed = 20240101;
  CLI::App* validate = app.add_subcommand("validate", "Run the oracle and invariant suite");
  validate->add_option("--scale", scale, "quick|full")
      ->envname("PFELS_SCALE")
      ->check(CLI::IsMember({"quick", "full"}));
  validate->add_option("--seed", validate_seed, "Validation seed")->envname("PFELS_SEED");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const pfels::ExperimentConfig cfg = load_config(args);
      const pfels::RunOutputs outs = pfels::run_and_emit(cfg, args.out_dir);
      std::cout << "wrote " << outs.rounds_csv.string() << "\n"
                << "wrote " << outs.summary_json.string() << "\n"
                << "wrote " << outs.manifest_json.string() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      const pfels::ExperimentConfig cfg = load_config(args);
      const auto sweep_axis =
          axis == "compression" ? pfels::SweepAxis::compression : pfels::SweepAxis::epsilon;
      const auto summary = pfels::run_sweep(cfg, sweep_axis, values, args.out_dir);
      std::cout << "wrote " << summary.string() << "\n";
      return 0;
    }
    if (validate->parsed()) {
      const auto val_scale =
          scale == "full" ? pfels::ValidationScale::full : pfels::ValidationScale::quick;
      const auto results = pfels::run_validation(val_scale, validate_seed);
      std::cout << pfels::format_validation_table(results);
      for (const auto& r : results) {
        if (!r.passed) return 1;
      }
      return 0;
    }
  } catch (const pfels::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
