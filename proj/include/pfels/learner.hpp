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

#ifndef PFELS_LEARNER_HPP
#define PFELS_LEARNER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfels/numerics.hpp"

namespace pfels {

// One device's local data, row-major features with one target per row.
// Classification targets hold the class index; regression targets are real.
struct ClientDataset {
  std::size_t client_id = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;  // rows x cols
  std::vector<double> targets;   // rows

  const double* row(std::size_t i) const { return features.data() + i * cols; }
};

enum class LocalMode { steps, epochs };

struct TrainingConfig {
  double learning_rate = 0.05;  // eta
  int local_steps = 1;          // tau: SGD steps or epochs depending on mode
  LocalMode local_mode = LocalMode::steps;
  std::size_t batch_size = 10;
  double grad_clip = 1.0;       // C1, applied to every stochastic gradient
  double update_clip = 1.0;     // C, used by the artificial-noise baseline
  double momentum = 0.0;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("train.learning_rate must be >= 0");
    if (local_steps < 1) throw std::invalid_argument("train.local_steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("train.clip_c1 must be > 0");
    if (!(update_clip > 0.0)) throw std::invalid_argument("train.clip_update must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train.momentum must lie in [0, 1)");
  }
};

enum class ModelKind { linear_regression, logistic_regression, mlp_1hidden };

// Desk-scale models with hand-written gradients. Parameter layouts:
//   linear_regression:   [w (f), b]                          d = f + 1
//   logistic_regression: [W (c x f row-major), b (c)]        d = c (f + 1)
//   mlp_1hidden:         [W1 (h x f), b1 (h), W2 (c x h), b2 (c)]
struct Model {
  ModelKind kind = ModelKind::linear_regression;
  std::size_t features = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  ModelVector params;

  static Model linear(std::size_t features) {
    Model m;
    m.kind = ModelKind::linear_regression;
    m.features = features;
    m.params.assign(m.dim(), 0.0);
    return m;
  }

  static Model logistic(std::size_t features, std::size_t classes) {
    if (classes < 2) throw std::invalid_argument("logistic model needs >= 2 classes");
    Model m;
    m.kind = ModelKind::logistic_regression;
    m.features = features;
    m.classes = classes;
    m.params.assign(m.dim(), 0.0);
    return m;
  }

  static Model mlp(std::size_t features, std::size_t hidden, std::size_t classes) {
    if (classes < 2) throw std::invalid_argument("mlp model needs >= 2 classes");
    if (hidden < 1) throw std::invalid_argument("mlp model needs hidden >= 1");
    Model m;
    m.kind = ModelKind::mlp_1hidden;
    m.features = features;
    m.hidden = hidden;
    m.classes = classes;
    m.params.assign(m.dim(), 0.0);
    return m;
  }

  std::size_t dim() const {
    switch (kind) {
      case ModelKind::linear_regression:
        return features + 1;
      case ModelKind::logistic_regression:
        return classes * (features + 1);
      case ModelKind::mlp_1hidden:
        return hidden * features + hidden + classes * hidden + classes;
    }
    return 0;
  }

  bool is_classifier() const { return kind != ModelKind::linear_regression; }
};

struct LossGrad {
  double loss = 0.0;
  ModelVector grad;
};

namespace detail {

inline void softmax_in_place(std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - peak);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

inline LossGrad linear_loss_grad(const Model& m, const ClientDataset& data,
                                 const std::vector<std::size_t>& batch) {
  const std::size_t f = m.features;
  LossGrad out;
  out.grad.assign(m.dim(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i : batch) {
    const double* x = data.row(i);
    double pred = m.params[f];  // bias
    for (std::size_t j = 0; j < f; ++j) pred += m.params[j] * x[j];
    const double err = pred - data.targets[i];
    out.loss += err * err * inv_n;
    const double g = 2.0 * err * inv_n;
    for (std::size_t j = 0; j < f; ++j) out.grad[j] += g * x[j];
    out.grad[f] += g;
  }
  return out;
}

inline LossGrad logistic_loss_grad(const Model& m, const ClientDataset& data,
                                   const std::vector<std::size_t>& batch) {
  const std::size_t f = m.features;
  const std::size_t c = m.classes;
  LossGrad out;
  out.grad.assign(m.dim(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> logits(c);
  for (std::size_t i : batch) {
    const double* x = data.row(i);
    for (std::size_t a = 0; a < c; ++a) {
      double z = m.params[c * f + a];  // bias block after the weight block
      const double* wa = m.params.data() + a * f;
      for (std::size_t j = 0; j < f; ++j) z += wa[j] * x[j];
      logits[a] = z;
    }
    softmax_in_place(logits);
    const auto label = static_cast<std::size_t>(data.targets[i]);
    out.loss += -std::log(std::max(logits[label], 1e-300)) * inv_n;
    for (std::size_t a = 0; a < c; ++a) {
      const double dz = (logits[a] - (a == label ? 1.0 : 0.0)) * inv_n;
      double* ga = out.grad.data() + a * f;
      for (std::size_t j = 0; j < f; ++j) ga[j] += dz * x[j];
      out.grad[c * f + a] += dz;
    }
  }
  return out;
}

inline LossGrad mlp_loss_grad(const Model& m, const ClientDataset& data,
                              const std::vector<std::size_t>& batch) {
  const std::size_t f = m.features;
  const std::size_t h = m.hidden;
  const std::size_t c = m.classes;
  const double* w1 = m.params.data();          // h x f
  const double* b1 = w1 + h * f;               // h
  const double* w2 = b1 + h;                   // c x h
  const double* b2 = w2 + c * h;               // c
  LossGrad out;
  out.grad.assign(m.dim(), 0.0);
  double* gw1 = out.grad.data();
  double* gb1 = gw1 + h * f;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + c * h;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> act(h);
  std::vector<double> logits(c);
  std::vector<double> dact(h);
  for (std::size_t i : batch) {
    const double* x = data.row(i);
    for (std::size_t u = 0; u < h; ++u) {
      double z = b1[u];
      const double* wu = w1 + u * f;
      for (std::size_t j = 0; j < f; ++j) z += wu[j] * x[j];
      act[u] = std::tanh(z);
    }
    for (std::size_t a = 0; a < c; ++a) {
      double z = b2[a];
      const double* wa = w2 + a * h;
      for (std::size_t u = 0; u < h; ++u) z += wa[u] * act[u];
      logits[a] = z;
    }
    softmax_in_place(logits);
    const auto label = static_cast<std::size_t>(data.targets[i]);
    out.loss += -std::log(std::max(logits[label], 1e-300)) * inv_n;
    std::fill(dact.begin(), dact.end(), 0.0);
    for (std::size_t a = 0; a < c; ++a) {
      const double dz = (logits[a] - (a == label ? 1.0 : 0.0)) * inv_n;
      double* ga = gw2 + a * h;
      const double* wa = w2 + a * h;
      for (std::size_t u = 0; u < h; ++u) {
        ga[u] += dz * act[u];
        dact[u] += dz * wa[u];
      }
      gb2[a] += dz;
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double dz = dact[u] * (1.0 - act[u] * act[u]);  // tanh'
      double* gu = gw1 + u * f;
      for (std::size_t j = 0; j < f; ++j) gu[j] += dz * x[j];
      gb1[u] += dz;
    }
  }
  return out;
}

}  // namespace detail

// Mean loss over the batch rows and its exact gradient w.r.t. params.
inline LossGrad loss_and_gradient(const Model& m, const ClientDataset& data,
                                  const std::vector<std::size_t>& batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  if (data.cols != m.features) throw std::invalid_argument("loss_and_gradient: feature mismatch");
  if (m.params.size() != m.dim()) throw std::invalid_argument("loss_and_gradient: bad param size");
  for (std::size_t i : batch) {
    if (i >= data.rows) throw std::invalid_argument("loss_and_gradient: batch index out of range");
  }
  switch (m.kind) {
    case ModelKind::linear_regression:
      return detail::linear_loss_grad(m, data, batch);
    case ModelKind::logistic_regression:
      return detail::logistic_loss_grad(m, data, batch);
    case ModelKind::mlp_1hidden:
      return detail::mlp_loss_grad(m, data, batch);
  }
  throw std::logic_error("loss_and_gradient: unknown model kind");
}

inline std::vector<std::size_t> all_rows(const ClientDataset& data) {
  std::vector<std::size_t> idx(data.rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline LossGrad full_loss_and_gradient(const Model& m, const ClientDataset& data) {
  return loss_and_gradient(m, data, all_rows(data));
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // meaningful for classifiers only
};

inline Evaluation evaluate(const Model& m, const ClientDataset& data) {
  if (data.rows == 0) throw std::invalid_argument("evaluate: empty dataset");
  Evaluation ev;
  const LossGrad lg = full_loss_and_gradient(m, data);
  ev.loss = lg.loss;
  if (!m.is_classifier()) return ev;
  std::size_t correct = 0;
  std::vector<double> logits(m.classes);
  for (std::size_t i = 0; i < data.rows; ++i) {
    const double* x = data.row(i);
    if (m.kind == ModelKind::logistic_regression) {
      const std::size_t f = m.features;
      for (std::size_t a = 0; a < m.classes; ++a) {
        double z = m.params[m.classes * f + a];
        for (std::size_t j = 0; j < f; ++j) z += m.params[a * f + j] * x[j];
        logits[a] = z;
      }
    } else {
      const std::size_t f = m.features;
      const std::size_t h = m.hidden;
      const double* w1 = m.params.data();
      const double* b1 = w1 + h * f;
      const double* w2 = b1 + h;
      const double* b2 = w2 + m.classes * h;
      std::vector<double> act(h);
      for (std::size_t u = 0; u < h; ++u) {
        double z = b1[u];
        for (std::size_t j = 0; j < f; ++j) z += w1[u * f + j] * x[j];
        act[u] = std::tanh(z);
      }
      for (std::size_t a = 0; a < m.classes; ++a) {
        double z = b2[a];
        for (std::size_t u = 0; u < h; ++u) z += w2[a * h + u] * act[u];
        logits[a] = z;
      }
    }
    const auto pred = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (pred == static_cast<std::size_t>(data.targets[i])) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.rows);
  return ev;
}

struct LocalTrainResult {
  ModelVector delta;
  int steps_taken = 0;
  double mean_clipped_grad_norm = 0.0;
};

// SGD steps the realized step count depends on the mode: local_steps in
// steps mode, local_steps * ceil(n / batch) in epochs mode.
inline int planned_local_steps(const TrainingConfig& cfg, std::size_t rows) {
  if (cfg.local_mode == LocalMode::steps) return cfg.local_steps;
  const std::size_t batch = std::min<std::size_t>(cfg.batch_size, rows);
  const auto per_epoch = static_cast<int>((rows + batch - 1) / batch);
  return cfg.local_steps * per_epoch;
}

// Local update of one device: per-step stochastic gradients clipped to C1
// before the SGD step, so every update norm stays within eta * steps * C1.
// With momentum the telescoping argument behind that bound breaks, so the
// final update is clipped back to eta * steps * C1.
inline LocalTrainResult local_train(const Model& model_init, const ClientDataset& data,
                                    const TrainingConfig& cfg, RngStream stream) {
  cfg.validate();
  if (data.rows == 0) throw std::invalid_argument("local_train: empty dataset");
  const std::size_t batch_size = std::min<std::size_t>(cfg.batch_size, data.rows);
  Model m = model_init;
  ModelVector velocity;
  if (cfg.momentum > 0.0) velocity.assign(m.params.size(), 0.0);

  LocalTrainResult res;
  double norm_sum = 0.0;

  const auto apply_step = [&](const std::vector<std::size_t>& batch) {
    LossGrad lg = loss_and_gradient(m, data, batch);
    ModelVector g = clip_to_norm(lg.grad, cfg.grad_clip);
    norm_sum += l2_norm(g);
    if (cfg.momentum > 0.0) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        velocity[j] = cfg.momentum * velocity[j] + g[j];
      }
      axpy_in_place(m.params, -cfg.learning_rate, velocity);
    } else {
      axpy_in_place(m.params, -cfg.learning_rate, g);
    }
    ++res.steps_taken;
  };

  if (cfg.local_mode == LocalMode::steps) {
    std::vector<std::size_t> batch(batch_size);
    for (int s = 0; s < cfg.local_steps; ++s) {
      // Uniform batch without replacement via partial Fisher-Yates.
      std::vector<std::size_t> idx = all_rows(data);
      for (std::size_t j = 0; j < batch_size; ++j) {
        const std::size_t at = j + static_cast<std::size_t>(stream.next_below(data.rows - j));
        std::swap(idx[j], idx[at]);
        batch[j] = idx[j];
      }
      apply_step(batch);
    }
  } else {
    for (int epoch = 0; epoch < cfg.local_steps; ++epoch) {
      std::vector<std::size_t> idx = all_rows(data);
      for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
        const std::size_t at = j + static_cast<std::size_t>(stream.next_below(idx.size() - j));
        std::swap(idx[j], idx[at]);
      }
      for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t stop = std::min(idx.size(), start + batch_size);
        apply_step(std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                            idx.begin() + static_cast<std::ptrdiff_t>(stop)));
      }
    }
  }

  res.delta = subtracted(m.params, model_init.params);
  if (cfg.momentum > 0.0) {
    const double bound =
        cfg.learning_rate * static_cast<double>(res.steps_taken) * cfg.grad_clip;
    if (bound > 0.0) res.delta = clip_to_norm(res.delta, bound);
  }
  res.mean_clipped_grad_norm =
      res.steps_taken > 0 ? norm_sum / static_cast<double>(res.steps_taken) : 0.0;
  assert_finite(res.delta, "local_train");
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic federations
// ---------------------------------------------------------------------------

enum class TaskKind { blobs, linreg, digits };

struct FederationParams {
  TaskKind task = TaskKind::blobs;
  std::size_t population = 8;         // N
  std::size_t samples_per_client = 32;
  std::size_t features = 8;           // fixed to 7 for digits
  std::size_t classes = 4;            // fixed to 10 for digits
  double heterogeneity = 0.0;         // 0 = IID, 1 = fully skewed
  double noise_std = 0.6;             // feature noise around class centers
  std::size_t test_samples = 256;
};

namespace detail {

// Segment patterns of a seven-segment display, digits 0..9.
inline const std::array<std::array<double, 7>, 10>& seven_segment_patterns() {
  static const std::array<std::array<double, 7>, 10> patterns = {{
      {1, 1, 1, 1, 1, 1, 0},  // 0
      {0, 1, 1, 0, 0, 0, 0},  // 1
      {1, 1, 0, 1, 1, 0, 1},  // 2
      {1, 1, 1, 1, 0, 0, 1},  // 3
      {0, 1, 1, 0, 0, 1, 1},  // 4
      {1, 0, 1, 1, 0, 1, 1},  // 5
      {1, 0, 1, 1, 1, 1, 1},  // 6
      {1, 1, 1, 0, 0, 0, 0},  // 7
      {1, 1, 1, 1, 1, 1, 1},  // 8
      {1, 1, 1, 1, 0, 1, 1},  // 9
  }};
  return patterns;
}

struct TaskSpec {
  std::vector<std::vector<double>> centers;  // classification: per-class feature means
  std::vector<double> regress_w;             // regression: true weights
  double regress_b = 0.0;
};

// Shared task parameters: identical for every client and the test split
// because they derive from the same sub-stream.
inline TaskSpec make_task_spec(const FederationParams& fp, const RngStream& base) {
  TaskSpec spec;
  if (fp.task == TaskKind::linreg) {
    RngStream sw = base.fork(0).fork(2);
    spec.regress_w.resize(fp.features);
    for (double& w : spec.regress_w) w = sw.next_gaussian();
    spec.regress_b = sw.next_gaussian();
    return spec;
  }
  if (fp.task == TaskKind::digits) {
    const auto& patterns = seven_segment_patterns();
    spec.centers.assign(10, std::vector<double>(7));
    for (std::size_t c = 0; c < 10; ++c) {
      for (std::size_t j = 0; j < 7; ++j) spec.centers[c][j] = 2.0 * patterns[c][j] - 1.0;
    }
    return spec;
  }
  RngStream sc = base.fork(0).fork(3);
  spec.centers.assign(fp.classes, std::vector<double>(fp.features));
  for (auto& center : spec.centers) {
    for (double& x : center) x = 2.0 * sc.next_gaussian();
  }
  return spec;
}

inline std::size_t task_features(const FederationParams& fp) {
  return fp.task == TaskKind::digits ? 7 : fp.features;
}

inline std::size_t task_classes(const FederationParams& fp) {
  return fp.task == TaskKind::digits ? 10 : fp.classes;
}

// Sample `rows` examples for one logical client. heterogeneity drives a
// label-preference mixture and a per-client feature shift; client_id ==
// population marks the global test split (uniform labels, zero shift).
inline ClientDataset sample_dataset(const FederationParams& fp, const TaskSpec& spec,
                                    std::size_t client_id, std::size_t rows, RngStream s) {
  const std::size_t f = task_features(fp);
  ClientDataset data;
  data.client_id = client_id;
  data.rows = rows;
  data.cols = f;
  data.features.resize(rows * f);
  data.targets.resize(rows);
  const bool is_test = client_id >= fp.population;

  if (fp.task == TaskKind::linreg) {
    std::vector<double> tilt(f, 0.0);
    if (!is_test && fp.heterogeneity > 0.0) {
      RngStream st = s.fork(0);
      for (double& t : tilt) t = 0.5 * fp.heterogeneity * st.next_gaussian();
    }
    RngStream sx = s.fork(1);
    for (std::size_t i = 0; i < rows; ++i) {
      double y = spec.regress_b;
      for (std::size_t j = 0; j < f; ++j) {
        const double x = sx.next_gaussian();
        data.features[i * f + j] = x;
        y += (spec.regress_w[j] + tilt[j]) * x;
      }
      data.targets[i] = y + fp.noise_std * sx.next_gaussian();
    }
    return data;
  }

  const std::size_t classes = task_classes(fp);
  std::vector<double> shift(f, 0.0);
  if (!is_test && fp.heterogeneity > 0.0) {
    RngStream st = s.fork(0);
    for (double& x : shift) x = 0.5 * fp.heterogeneity * st.next_gaussian();
  }
  const std::size_t preferred = is_test ? 0 : client_id % classes;
  RngStream sx = s.fork(1);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t label;
    if (!is_test && sx.next_double() < fp.heterogeneity) {
      label = preferred;
    } else {
      label = static_cast<std::size_t>(sx.next_below(classes));
    }
    data.targets[i] = static_cast<double>(label);
    for (std::size_t j = 0; j < f; ++j) {
      data.features[i * f + j] =
          spec.centers[label][j] + shift[j] + fp.noise_std * sx.next_gaussian();
    }
  }
  return data;
}

}  // namespace detail

// N client datasets. heterogeneity 0 draws every client from one global
// distribution; heterogeneity 1 gives each client a dominant label and a
// feature-mean shift.
inline std::vector<ClientDataset> make_synthetic_federation(const FederationParams& fp,
                                                            const RngStream& stream) {
  if (fp.population < 1) throw std::invalid_argument("federation: population must be >= 1");
  if (fp.samples_per_client < 1) {
    throw std::invalid_argument("federation: samples_per_client must be >= 1");
  }
  if (fp.heterogeneity < 0.0 || fp.heterogeneity > 1.0) {
    throw std::invalid_argument("federation: heterogeneity must lie in [0, 1]");
  }
  const detail::TaskSpec spec = detail::make_task_spec(fp, stream);
  std::vector<ClientDataset> out;
  out.reserve(fp.population);
  for (std::size_t i = 0; i < fp.population; ++i) {
    out.push_back(
        detail::sample_dataset(fp, spec, i, fp.samples_per_client, stream.fork(1 + i)));
  }
  return out;
}

// Held-out split from the same task parameters, IID across the label space.
inline ClientDataset make_test_dataset(const FederationParams& fp, const RngStream& stream) {
  const detail::TaskSpec spec = detail::make_task_spec(fp, stream);
  return detail::sample_dataset(fp, spec, fp.population, fp.test_samples,
                                stream.fork(1 + fp.population));
}

}  // namespace pfels

#endif  // PFELS_LEARNER_HPP
