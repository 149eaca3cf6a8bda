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

#ifndef PFELS_ORCHESTRATOR_HPP
#define PFELS_ORCHESTRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfels/channel.hpp"
#include "pfels/learner.hpp"
#include "pfels/numerics.hpp"
#include "pfels/power.hpp"
#include "pfels/privacy.hpp"
#include "pfels/sparsifier.hpp"

namespace pfels {

enum class Algorithm { pfels, dp_fedavg, fedavg, wfl_p, wfl_pdp };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pfels: return "pfels";
    case Algorithm::dp_fedavg: return "dp_fedavg";
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::wfl_p: return "wfl_p";
    case Algorithm::wfl_pdp: return "wfl_pdp";
  }
  return "?";
}

struct ChannelConfig {
  GainDistribution gains;
  double noise_std = 1.0;  // sigma_0
  int subcarriers = 600;   // K
};

struct PowerConfig {
  double snr_db_lo = 2.0;
  double snr_db_hi = 15.0;
  // When positive, every device gets this budget instead of the SNR-derived
  // P_i = 10^(SNR/10) d sigma_0^2.
  double fixed_budget = 0.0;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::pfels;
  std::size_t population = 8;  // N
  std::size_t cohort = 4;      // r
  int rounds = 10;             // T
  double compression = 1.0;    // p; k = max(1, round(p d))
  std::uint64_t seed = 1;
  bool debias = false;
  int eval_every = 1;

  TrainingConfig train;
  FederationParams data;
  ModelKind model = ModelKind::logistic_regression;
  std::size_t hidden = 16;

  ChannelConfig channel;
  PowerConfig power;

  double epsilon = 1.0;
  double delta = 0.0;                // 0 resolves to 1/N
  double dp_noise_multiplier = 1.0;  // dp_fedavg's sigma

  double resolved_delta() const {
    return delta > 0.0 ? delta : 1.0 / static_cast<double>(population);
  }

  PrivacySpec privacy_spec() const { return {epsilon, resolved_delta(), cohort, population}; }

  void validate() const {
    if (population < 1) throw std::invalid_argument("population must be >= 1");
    if (cohort < 1 || cohort > population) throw std::invalid_argument("cohort must lie in [1, population]");
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!(compression > 0.0) || compression > 1.0) throw std::invalid_argument("compression must lie in (0, 1]");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("privacy.epsilon must be > 0");
    if (delta < 0.0 || delta >= 1.0) throw std::invalid_argument("privacy.delta must lie in [0, 1)");
    if (channel.noise_std < 0.0) throw std::invalid_argument("channel.noise_std must be >= 0");
    if (dp_noise_multiplier < 0.0) throw std::invalid_argument("dp_fedavg.noise_multiplier must be >= 0");
    train.validate();
    const bool needs_classifier = data.task != TaskKind::linreg;
    const bool is_classifier = model != ModelKind::linear_regression;
    if (needs_classifier != is_classifier) {
      throw std::invalid_argument("data.task and data.model disagree (regression vs classification)");
    }
    const bool wireless = algorithm == Algorithm::pfels || algorithm == Algorithm::wfl_p ||
                          algorithm == Algorithm::wfl_pdp;
    if (wireless && power.fixed_budget <= 0.0 && channel.noise_std <= 0.0) {
      throw std::invalid_argument(
          "power.budget is required when channel.noise_std = 0 (SNR-derived budgets degenerate)");
    }
    if (wireless && !(train.learning_rate > 0.0)) {
      throw std::invalid_argument("train.learning_rate must be > 0 for power-controlled schemes");
    }
  }
};

// Per-round telemetry; the cumulative fields never decrease.
struct RoundRecord {
  int round = 0;
  double train_loss = 0.0;
  double test_metric = 0.0;  // accuracy for classifiers, loss for regression
  double beta = 0.0;
  std::string regime = "none";
  bool dp_feasible = false;
  double energy_cum = 0.0;
  std::uint64_t subcarriers_cum = 0;
  std::size_t k = 0;
  double epsilon = 0.0;
  double mean_clipped_grad_norm = 0.0;
};

// Uniform r-subset of [0, N) without replacement, ascending order.
inline std::vector<std::size_t> sample_cohort(std::size_t population, std::size_t cohort,
                                              RngStream stream) {
  if (cohort > population) throw std::invalid_argument("sample_cohort: cohort exceeds population");
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < cohort; ++j) {
    const std::size_t at = j + static_cast<std::size_t>(stream.next_below(population - j));
    std::swap(idx[j], idx[at]);
  }
  std::vector<std::size_t> out(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cohort));
  std::sort(out.begin(), out.end());
  return out;
}

// Server-side estimate of the aggregated update from the received signal:
// embed(y) / (r beta), optionally rescaled by d/k to undo the selection
// shrinkage.
inline ModelVector reconstruct_update(const RandKProjection& proj, const ModelVector& received,
                                      std::size_t cohort, double beta, bool debias) {
  if (!(beta > 0.0)) throw std::invalid_argument("reconstruct_update: beta must be positive");
  if (cohort < 1) throw std::invalid_argument("reconstruct_update: empty cohort");
  double scale = 1.0 / (static_cast<double>(cohort) * beta);
  if (debias) scale *= static_cast<double>(proj.d) / static_cast<double>(proj.k);
  return scaled(embed_transpose(proj, received), scale);
}

struct ExperimentState {
  ExperimentConfig cfg;
  std::vector<ClientDataset> clients;
  ClientDataset test;
  Model model;
  std::vector<double> budgets;  // P_i, one per device
  EnergyLedger ledger;
  RngStream root{0};
  std::size_t kept_dim = 0;  // k for pfels, d otherwise
  int steps = 0;             // realized SGD steps per client per round
  std::optional<double> c2;  // absent when sigma_0 = 0
  std::uint64_t subcarriers_cum = 0;
  double last_test_metric = 0.0;
};

inline Model make_model(const ExperimentConfig& cfg) {
  const std::size_t f = detail::task_features(cfg.data);
  switch (cfg.model) {
    case ModelKind::linear_regression:
      return Model::linear(f);
    case ModelKind::logistic_regression:
      return Model::logistic(f, detail::task_classes(cfg.data));
    case ModelKind::mlp_1hidden:
      return Model::mlp(f, cfg.hidden, detail::task_classes(cfg.data));
  }
  throw std::logic_error("make_model: unknown kind");
}

inline ExperimentState make_experiment_state(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.data.population = cfg.population;
  cfg.validate();

  ExperimentState st;
  st.cfg = cfg;
  st.root = RngStream(cfg.seed);

  RngStream data_stream = st.root.fork(stream_tag::kDataGen);
  st.clients = make_synthetic_federation(cfg.data, data_stream);
  st.test = make_test_dataset(cfg.data, data_stream);

  st.model = make_model(cfg);
  RngStream init = st.root.fork(stream_tag::kModelInit);
  st.model.params = gaussian_sample(init, st.model.dim(), 0.1);

  const std::size_t d = st.model.dim();
  st.kept_dim = cfg.algorithm == Algorithm::pfels
                    ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                                   std::llround(cfg.compression * static_cast<double>(d))))
                    : d;
  st.kept_dim = std::min(st.kept_dim, d);
  st.steps = planned_local_steps(cfg.train, cfg.data.samples_per_client);

  st.budgets.resize(cfg.population);
  if (cfg.power.fixed_budget > 0.0) {
    std::fill(st.budgets.begin(), st.budgets.end(), cfg.power.fixed_budget);
  } else {
    RngStream bs = st.root.fork(stream_tag::kBudget);
    const double sigma_sq = cfg.channel.noise_std * cfg.channel.noise_std;
    for (double& p : st.budgets) {
      const double snr_db =
          cfg.power.snr_db_lo + (cfg.power.snr_db_hi - cfg.power.snr_db_lo) * bs.next_double();
      p = std::pow(10.0, snr_db / 10.0) * static_cast<double>(d) * sigma_sq;
    }
  }

  st.ledger = EnergyLedger(cfg.population);
  if (cfg.channel.noise_std > 0.0) {
    st.c2 = pfels_c2(cfg.train.learning_rate, st.steps, cfg.train.grad_clip, cfg.cohort,
                     cfg.population, cfg.resolved_delta(), cfg.channel.noise_std);
  }
  st.last_test_metric = 0.0;
  return st;
}

namespace detail {

inline double cohort_mean_loss(const ExperimentState& st, const std::vector<std::size_t>& cohort) {
  double sum = 0.0;
  for (std::size_t i : cohort) sum += evaluate(st.model, st.clients[i]).loss;
  return sum / static_cast<double>(cohort.size());
}

inline void finish_record(ExperimentState& st, int t, RoundRecord& rec) {
  rec.round = t;
  rec.epsilon = st.cfg.epsilon;
  rec.energy_cum = st.ledger.total_energy();
  rec.subcarriers_cum = st.subcarriers_cum;
  if (t % st.cfg.eval_every == 0 || t == st.cfg.rounds - 1) {
    const Evaluation ev = evaluate(st.model, st.test);
    st.last_test_metric = st.model.is_classifier() ? ev.accuracy : ev.loss;
  }
  rec.test_metric = st.last_test_metric;
}

struct CohortTraining {
  std::vector<LocalTrainResult> results;  // cohort order
  double mean_clipped_grad_norm = 0.0;
};

// Pure per-client training; client order cannot matter because every client
// draws from its own (round, client) stream.
inline CohortTraining train_cohort(const ExperimentState& st,
                                   const std::vector<std::size_t>& cohort, int t) {
  CohortTraining out;
  out.results.reserve(cohort.size());
  RngStream batch_root = st.root.fork(stream_tag::kMinibatch).fork(static_cast<std::uint64_t>(t));
  double norm_sum = 0.0;
  for (std::size_t i : cohort) {
    LocalTrainResult res = local_train(st.model, st.clients[i], st.cfg.train, batch_root.fork(i));
    norm_sum += res.mean_clipped_grad_norm;
    out.results.push_back(std::move(res));
  }
  out.mean_clipped_grad_norm = norm_sum / static_cast<double>(cohort.size());
  return out;
}

}  // namespace detail

// One wireless round shared by pfels / wfl_p / wfl_pdp: sparsify (pfels
// only), align transmit power, superpose over the channel, reconstruct, and
// apply. `algo` picks the alignment rule.
inline RoundRecord wireless_round(ExperimentState& st, int t, Algorithm algo) {
  const ExperimentConfig& cfg = st.cfg;
  const std::size_t d = st.model.dim();
  const std::size_t k = algo == Algorithm::pfels ? st.kept_dim : d;
  const auto tu = static_cast<std::uint64_t>(t);

  const std::vector<std::size_t> cohort =
      sample_cohort(cfg.population, cfg.cohort, st.root.fork(stream_tag::kCohort).fork(tu));
  const RandKProjection proj =
      generate_projection(d, k, st.root.fork(stream_tag::kRandK).fork(tu));
  const ChannelRealization chan =
      draw_channel(cohort.size(), cfg.channel.gains, cfg.channel.noise_std,
                   cfg.channel.subcarriers, st.root.fork(stream_tag::kChannelGain).fork(tu));

  std::vector<double> cohort_budgets(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) cohort_budgets[i] = st.budgets[cohort[i]];

  PowerDecision decision;
  bool dp_ok = false;
  switch (algo) {
    case Algorithm::pfels:
      if (st.c2) {
        decision = beta_pfels(chan.gains, cohort_budgets, d, k, cfg.train.learning_rate, st.steps,
                              cfg.train.grad_clip, cfg.epsilon, *st.c2);
        dp_ok = pfels_round_is_private(decision.beta, *st.c2, cfg.epsilon);
        if (!dp_ok) throw std::logic_error("pfels round violated its own DP constraint");
      } else {
        decision.beta = beta_power_cap(chan.gains, cohort_budgets, d, k, cfg.train.learning_rate,
                                       st.steps, cfg.train.grad_clip);
        decision.regime = PowerRegime::power_limited;
        decision.alphas.resize(chan.gains.size());
        for (std::size_t i = 0; i < chan.gains.size(); ++i) {
          decision.alphas[i] = decision.beta / chan.gains[i];
        }
      }
      break;
    case Algorithm::wfl_p:
      decision = beta_wflp(chan.gains, cohort_budgets, cfg.train.learning_rate, st.steps,
                           cfg.train.grad_clip);
      dp_ok = st.c2 ? pfels_round_is_private(decision.beta, *st.c2, cfg.epsilon) : false;
      break;
    case Algorithm::wfl_pdp:
      if (st.c2) {
        decision = beta_wflpdp(chan.gains, cohort_budgets, cfg.train.learning_rate, st.steps,
                               cfg.train.grad_clip, cfg.epsilon, *st.c2);
        dp_ok = pfels_round_is_private(decision.beta, *st.c2, cfg.epsilon);
        if (!dp_ok) throw std::logic_error("wfl_pdp round violated its own DP constraint");
      } else {
        decision = beta_wflp(chan.gains, cohort_budgets, cfg.train.learning_rate, st.steps,
                             cfg.train.grad_clip);
      }
      break;
    default:
      throw std::logic_error("wireless_round: not a wireless algorithm");
  }

  RoundRecord rec;
  rec.train_loss = detail::cohort_mean_loss(st, cohort);

  const detail::CohortTraining trained = detail::train_cohort(st, cohort, t);
  std::vector<ModelVector> signals;
  signals.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    ModelVector x = scaled(project(proj, trained.results[i].delta), decision.alphas[i]);
    st.ledger.record(cohort[i], x);
    signals.push_back(std::move(x));
  }

  const ModelVector received = aircomp_transmit(
      signals, chan.gains, cfg.channel.noise_std, st.root.fork(stream_tag::kChannelNoise).fork(tu));
  const ModelVector update =
      reconstruct_update(proj, received, cohort.size(), decision.beta, cfg.debias);
  add_in_place(st.model.params, update);
  assert_finite(st.model.params, "wireless_round");

  st.subcarriers_cum += static_cast<std::uint64_t>(k) * cohort.size();
  rec.beta = decision.beta;
  rec.regime = to_string(decision.regime);
  rec.dp_feasible = dp_ok;
  rec.k = k;
  rec.mean_clipped_grad_norm = trained.mean_clipped_grad_norm;
  detail::finish_record(st, t, rec);
  return rec;
}

inline RoundRecord pfels_round(ExperimentState& st, int t) {
  return wireless_round(st, t, Algorithm::pfels);
}

inline RoundRecord baseline_round(ExperimentState& st, int t, Algorithm which) {
  if (which != Algorithm::wfl_p && which != Algorithm::wfl_pdp) {
    throw std::invalid_argument("baseline_round: expects wfl_p or wfl_pdp");
  }
  return wireless_round(st, t, which);
}

// Noiseless digital rounds: fedavg averages raw updates, dp_fedavg clips
// them to C and adds the calibrated Gaussian before averaging.
inline RoundRecord digital_round(ExperimentState& st, int t, Algorithm algo) {
  const ExperimentConfig& cfg = st.cfg;
  const std::size_t d = st.model.dim();
  const auto tu = static_cast<std::uint64_t>(t);
  const std::vector<std::size_t> cohort =
      sample_cohort(cfg.population, cfg.cohort, st.root.fork(stream_tag::kCohort).fork(tu));

  RoundRecord rec;
  rec.train_loss = detail::cohort_mean_loss(st, cohort);

  const detail::CohortTraining trained = detail::train_cohort(st, cohort, t);
  ModelVector sum(d, 0.0);
  RngStream noise_root = st.root.fork(stream_tag::kDpNoise).fork(tu);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (algo == Algorithm::dp_fedavg) {
      add_in_place(sum, dpfedavg_perturb(trained.results[i].delta, cfg.train.update_clip,
                                         cfg.dp_noise_multiplier, cohort.size(),
                                         noise_root.fork(cohort[i])));
    } else {
      add_in_place(sum, trained.results[i].delta);
    }
  }
  axpy_in_place(st.model.params, 1.0 / static_cast<double>(cohort.size()), sum);
  assert_finite(st.model.params, "digital_round");

  st.subcarriers_cum += static_cast<std::uint64_t>(d) * cohort.size();
  rec.k = d;
  rec.mean_clipped_grad_norm = trained.mean_clipped_grad_norm;
  detail::finish_record(st, t, rec);
  return rec;
}

inline RoundRecord dpfedavg_round(ExperimentState& st, int t) {
  return digital_round(st, t, Algorithm::dp_fedavg);
}

inline RoundRecord run_round(ExperimentState& st, int t) {
  switch (st.cfg.algorithm) {
    case Algorithm::pfels:
      return pfels_round(st, t);
    case Algorithm::wfl_p:
    case Algorithm::wfl_pdp:
      return baseline_round(st, t, st.cfg.algorithm);
    case Algorithm::dp_fedavg:
      return dpfedavg_round(st, t);
    case Algorithm::fedavg:
      return digital_round(st, t, Algorithm::fedavg);
  }
  throw std::logic_error("run_round: unknown algorithm");
}

// T rounds, deterministic in (config, seed).
inline std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg) {
  ExperimentState st = make_experiment_state(cfg);
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.rounds));
  for (int t = 0; t < cfg.rounds; ++t) records.push_back(run_round(st, t));
  return records;
}

}  // namespace pfels

#endif  // PFELS_ORCHESTRATOR_HPP
