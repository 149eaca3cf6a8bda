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

#ifndef PFELS_CONFIG_HPP
#define PFELS_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pfels/orchestrator.hpp"

namespace pfels {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat `key = value` configuration with `#` comments. Dotted keys group the
// experiment sections; every key must be known and every required key
// present, and errors always name the offending field.
class KvConfig {
 public:
  static KvConfig parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected `key = value`, got `" + trimmed + "`");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
      if (cfg.values_.count(key)) throw ConfigError("duplicate config key `" + key + "`");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KvConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file `" + path + "`");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  void override_value(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string require_string(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config field `" + key + "`");
    consumed_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  double require_double(const std::string& key) { return to_double(key, require_string(key)); }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return to_double(key, require_string(key));
  }

  std::int64_t require_int(const std::string& key) { return to_int(key, require_string(key)); }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    return to_int(key, require_string(key));
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string s = require_string(key);
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config field `" + key + "`: expected unsigned integer, got `" + s + "`");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string s = require_string(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config field `" + key + "`: expected boolean, got `" + s + "`");
  }

  // Call after extraction: any key never consumed is unknown (typo guard).
  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) throw ConfigError("unknown config field `" + key + "`");
    }
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  double to_double(const std::string& key, const std::string& s) const {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config field `" + key + "`: expected number, got `" + s + "`");
    }
  }

  std::int64_t to_int(const std::string& key, const std::string& s) const {
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config field `" + key + "`: expected integer, got `" + s + "`");
    }
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

namespace detail {

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "pfels") return Algorithm::pfels;
  if (s == "dp_fedavg") return Algorithm::dp_fedavg;
  if (s == "fedavg") return Algorithm::fedavg;
  if (s == "wfl_p") return Algorithm::wfl_p;
  if (s == "wfl_pdp") return Algorithm::wfl_pdp;
  throw ConfigError("config field `algorithm`: unknown value `" + s +
                    "` (expected pfels|dp_fedavg|fedavg|wfl_p|wfl_pdp)");
}

inline TaskKind parse_task(const std::string& s) {
  if (s == "blobs") return TaskKind::blobs;
  if (s == "linreg") return TaskKind::linreg;
  if (s == "digits") return TaskKind::digits;
  throw ConfigError("config field `data.task`: unknown value `" + s +
                    "` (expected blobs|linreg|digits)");
}

inline ModelKind parse_model(const std::string& s) {
  if (s == "linear") return ModelKind::linear_regression;
  if (s == "logistic") return ModelKind::logistic_regression;
  if (s == "mlp") return ModelKind::mlp_1hidden;
  throw ConfigError("config field `data.model`: unknown value `" + s +
                    "` (expected linear|logistic|mlp)");
}

inline LocalMode parse_local_mode(const std::string& s) {
  if (s == "steps") return LocalMode::steps;
  if (s == "epochs") return LocalMode::epochs;
  throw ConfigError("config field `train.local_mode`: unknown value `" + s +
                    "` (expected steps|epochs)");
}

}  // namespace detail

inline ExperimentConfig experiment_config_from(KvConfig& kv) {
  ExperimentConfig cfg;
  cfg.algorithm = detail::parse_algorithm(kv.require_string("algorithm"));
  cfg.rounds = static_cast<int>(kv.require_int("rounds"));
  cfg.population = static_cast<std::size_t>(kv.require_int("population"));
  cfg.cohort = static_cast<std::size_t>(kv.require_int("cohort"));
  cfg.compression = kv.get_double("compression", 1.0);
  cfg.seed = kv.get_u64("seed", 1);
  cfg.debias = kv.get_bool("debias", false);
  cfg.eval_every = static_cast<int>(kv.get_int("eval_every", 1));

  cfg.train.learning_rate = kv.get_double("train.learning_rate", 0.05);
  cfg.train.local_steps = static_cast<int>(kv.get_int("train.local_steps", 1));
  cfg.train.local_mode = detail::parse_local_mode(kv.get_string("train.local_mode", "steps"));
  cfg.train.batch_size = static_cast<std::size_t>(kv.get_int("train.batch_size", 10));
  cfg.train.grad_clip = kv.get_double("train.clip_c1", 1.0);
  cfg.train.update_clip = kv.get_double("train.clip_update", 1.0);
  cfg.train.momentum = kv.get_double("train.momentum", 0.0);

  cfg.data.task = detail::parse_task(kv.get_string("data.task", "blobs"));
  cfg.model = detail::parse_model(kv.get_string("data.model", "logistic"));
  cfg.data.samples_per_client = static_cast<std::size_t>(kv.get_int("data.samples_per_client", 32));
  cfg.data.features = static_cast<std::size_t>(kv.get_int("data.features", 8));
  cfg.data.classes = static_cast<std::size_t>(kv.get_int("data.classes", 4));
  cfg.hidden = static_cast<std::size_t>(kv.get_int("data.hidden", 16));
  cfg.data.heterogeneity = kv.get_double("data.heterogeneity", 0.0);
  cfg.data.noise_std = kv.get_double("data.noise_std", 0.6);
  cfg.data.test_samples = static_cast<std::size_t>(kv.get_int("data.test_samples", 256));
  cfg.data.population = cfg.population;

  cfg.channel.gains.mean = kv.get_double("channel.gain_mean", 0.02);
  cfg.channel.gains.lo = kv.get_double("channel.gain_lo", 0.0001);
  cfg.channel.gains.hi = kv.get_double("channel.gain_hi", 0.1);
  cfg.channel.noise_std = kv.get_double("channel.noise_std", 1.0);
  cfg.channel.subcarriers = static_cast<int>(kv.get_int("channel.subcarriers", 600));

  cfg.power.snr_db_lo = kv.get_double("power.snr_db_lo", 2.0);
  cfg.power.snr_db_hi = kv.get_double("power.snr_db_hi", 15.0);
  cfg.power.fixed_budget = kv.get_double("power.budget", 0.0);

  cfg.epsilon = kv.get_double("privacy.epsilon", 1.0);
  cfg.delta = kv.get_double("privacy.delta", 0.0);
  cfg.dp_noise_multiplier = kv.get_double("dp_fedavg.noise_multiplier", 1.0);

  kv.reject_unknown();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  KvConfig kv = KvConfig::parse_file(path);
  return experiment_config_from(kv);
}

// Canonical key=value dump; parsing it back yields the same experiment.
inline std::string to_kv_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  const auto task_name = [&] {
    switch (cfg.data.task) {
      case TaskKind::blobs: return "blobs";
      case TaskKind::linreg: return "linreg";
      case TaskKind::digits: return "digits";
    }
    return "?";
  };
  const auto model_name = [&] {
    switch (cfg.model) {
      case ModelKind::linear_regression: return "linear";
      case ModelKind::logistic_regression: return "logistic";
      case ModelKind::mlp_1hidden: return "mlp";
    }
    return "?";
  };
  out << "algorithm = " << to_string(cfg.algorithm) << '\n'
      << "rounds = " << cfg.rounds << '\n'
      << "population = " << cfg.population << '\n'
      << "cohort = " << cfg.cohort << '\n'
      << "compression = " << cfg.compression << '\n'
      << "seed = " << cfg.seed << '\n'
      << "debias = " << (cfg.debias ? "true" : "false") << '\n'
      << "eval_every = " << cfg.eval_every << '\n'
      << "train.learning_rate = " << cfg.train.learning_rate << '\n'
      << "train.local_steps = " << cfg.train.local_steps << '\n'
      << "train.local_mode = " << (cfg.train.local_mode == LocalMode::steps ? "steps" : "epochs")
      << '\n'
      << "train.batch_size = " << cfg.train.batch_size << '\n'
      << "train.clip_c1 = " << cfg.train.grad_clip << '\n'
      << "train.clip_update = " << cfg.train.update_clip << '\n'
      << "train.momentum = " << cfg.train.momentum << '\n'
      << "data.task = " << task_name() << '\n'
      << "data.model = " << model_name() << '\n'
      << "data.samples_per_client = " << cfg.data.samples_per_client << '\n'
      << "data.features = " << cfg.data.features << '\n'
      << "data.classes = " << cfg.data.classes << '\n'
      << "data.hidden = " << cfg.hidden << '\n'
      << "data.heterogeneity = " << cfg.data.heterogeneity << '\n'
      << "data.noise_std = " << cfg.data.noise_std << '\n'
      << "data.test_samples = " << cfg.data.test_samples << '\n'
      << "channel.gain_mean = " << cfg.channel.gains.mean << '\n'
      << "channel.gain_lo = " << cfg.channel.gains.lo << '\n'
      << "channel.gain_hi = " << cfg.channel.gains.hi << '\n'
      << "channel.noise_std = " << cfg.channel.noise_std << '\n'
      << "channel.subcarriers = " << cfg.channel.subcarriers << '\n'
      << "power.snr_db_lo = " << cfg.power.snr_db_lo << '\n'
      << "power.snr_db_hi = " << cfg.power.snr_db_hi << '\n'
      << "power.budget = " << cfg.power.fixed_budget << '\n'
      << "privacy.epsilon = " << cfg.epsilon << '\n'
      << "privacy.delta = " << cfg.delta << '\n'
      << "dp_fedavg.noise_multiplier = " << cfg.dp_noise_multiplier << '\n';
  return out.str();
}

}  // namespace pfels

#endif  // PFELS_CONFIG_HPP
