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
#include <vector>

#include "doctest.h"
#include "pfels/learner.hpp"

using namespace pfels;

namespace {

// Solve the (f+1) x (f+1) least-squares normal equations by Gaussian
// elimination; test-side oracle, no shared code with the model gradients.
ModelVector least_squares_fit(const ClientDataset& data) {
  const std::size_t f = data.cols;
  const std::size_t n = f + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < data.rows; ++i) {
    std::vector<double> x(n, 1.0);
    for (std::size_t j = 0; j < f; ++j) x[j] = data.row(i)[j];
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) a[p][q] += x[p] * x[q];
      a[p][n] += x[p] * data.targets[i];
    }
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t q = col; q <= n; ++q) a[r][q] -= factor * a[col][q];
    }
  }
  ModelVector out(n);
  for (std::size_t p = 0; p < n; ++p) out[p] = a[p][n] / a[p][p];
  return out;
}

ClientDataset tiny_regression(RngStream s, std::size_t rows, std::size_t f) {
  ClientDataset data;
  data.rows = rows;
  data.cols = f;
  data.features.resize(rows * f);
  data.targets.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < f; ++j) data.features[i * f + j] = s.next_gaussian();
    data.targets[i] = s.next_gaussian();
  }
  return data;
}

}  // namespace

TEST_CASE("linear regression gradient vanishes at the least-squares optimum") {
  RngStream s(1);
  const ClientDataset data = tiny_regression(s, 40, 3);
  Model m = Model::linear(3);
  m.params = least_squares_fit(data);
  const LossGrad lg = full_loss_and_gradient(m, data);
  CHECK(l2_norm(lg.grad) < 1e-10);
}

TEST_CASE("zero-parameter logistic loss on a balanced binary batch is ln 2") {
  ClientDataset data;
  data.rows = 8;
  data.cols = 2;
  data.features.assign(16, 0.5);
  data.targets = {0, 1, 0, 1, 0, 1, 0, 1};
  const Model m = Model::logistic(2, 2);
  const LossGrad lg = full_loss_and_gradient(m, data);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("mlp gradient matches central finite differences") {
  RngStream s(7);
  FederationParams fp;
  fp.population = 1;
  fp.samples_per_client = 6;
  fp.features = 4;
  fp.classes = 3;
  const ClientDataset data = make_synthetic_federation(fp, s.fork(0)).front();
  Model m = Model::mlp(4, 5, 3);
  RngStream init = s.fork(1);
  m.params = gaussian_sample(init, m.dim(), 1.0);
  const LossGrad lg = full_loss_and_gradient(m, data);
  const double step = 1e-5;
  for (std::size_t j = 0; j < m.dim(); ++j) {
    Model hi = m;
    Model lo = m;
    hi.params[j] += step;
    lo.params[j] -= step;
    const double fd =
        (full_loss_and_gradient(hi, data).loss - full_loss_and_gradient(lo, data).loss) /
        (2.0 * step);
    CHECK(std::abs(lg.grad[j] - fd) / std::max({std::abs(lg.grad[j]), std::abs(fd), 1e-3}) < 1e-5);
  }
}

TEST_CASE("loss_and_gradient validates inputs") {
  RngStream s(2);
  const ClientDataset data = tiny_regression(s, 5, 2);
  Model m = Model::linear(2);
  CHECK_THROWS_AS(loss_and_gradient(m, data, {}), std::invalid_argument);
  CHECK_THROWS_AS(loss_and_gradient(m, data, {7}), std::invalid_argument);
  Model wrong = Model::linear(3);
  CHECK_THROWS_AS(loss_and_gradient(wrong, data, {0}), std::invalid_argument);
}

TEST_CASE("zero learning rate trains to a zero update") {
  RngStream s(3);
  const ClientDataset data = tiny_regression(s, 12, 3);
  Model m = Model::linear(3);
  RngStream init = s.fork(5);
  m.params = gaussian_sample(init, m.dim(), 1.0);
  TrainingConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.local_steps = 4;
  cfg.batch_size = 4;
  const LocalTrainResult res = local_train(m, data, cfg, s.fork(6));
  CHECK(res.delta == ModelVector(m.dim(), 0.0));
  CHECK(res.steps_taken == 4);
}

TEST_CASE("single full-batch step is minus eta times the clipped gradient") {
  RngStream s(4);
  const ClientDataset data = tiny_regression(s, 10, 3);
  Model m = Model::linear(3);
  RngStream init = s.fork(1);
  m.params = gaussian_sample(init, m.dim(), 1.0);
  TrainingConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.local_steps = 1;
  cfg.batch_size = 10;  // the whole dataset
  cfg.grad_clip = 0.7;
  const LocalTrainResult res = local_train(m, data, cfg, s.fork(2));
  const ModelVector expect =
      scaled(clip_to_norm(full_loss_and_gradient(m, data).grad, 0.7), -0.05);
  for (std::size_t j = 0; j < expect.size(); ++j) {
    CHECK(res.delta[j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("update norm never exceeds eta * steps * C1") {
  RngStream s(5);
  for (int rep = 0; rep < 1000; ++rep) {
    RngStream sr = s.fork(rep);
    RngStream pick = sr.fork(0);
    FederationParams fp;
    fp.population = 1;
    fp.samples_per_client = 4 + pick.next_below(10);
    fp.features = 2 + pick.next_below(4);
    fp.classes = 2 + pick.next_below(3);
    fp.task = pick.next_below(2) == 0 ? TaskKind::blobs : TaskKind::linreg;
    fp.heterogeneity = pick.next_double();
    Model m;
    if (fp.task == TaskKind::linreg) {
      m = Model::linear(fp.features);
    } else {
      m = Model::logistic(fp.features, fp.classes);
    }
    RngStream init = sr.fork(1);
    m.params = gaussian_sample(init, m.dim(), 1.0);
    TrainingConfig cfg;
    cfg.learning_rate = 0.01 + pick.next_double();
    cfg.local_steps = 1 + static_cast<int>(pick.next_below(5));
    cfg.local_mode = pick.next_below(2) == 0 ? LocalMode::steps : LocalMode::epochs;
    cfg.batch_size = 1 + pick.next_below(8);
    cfg.grad_clip = 0.1 + 2.0 * pick.next_double();
    cfg.momentum = pick.next_below(2) == 0 ? 0.0 : 0.9;
    const ClientDataset data = make_synthetic_federation(fp, sr.fork(2)).front();
    const LocalTrainResult res = local_train(m, data, cfg, sr.fork(3));
    const double bound = cfg.learning_rate * res.steps_taken * cfg.grad_clip;
    CHECK(l2_norm(res.delta) <= bound * (1.0 + 1e-9));
    // Per-step clipping keeps every stochastic gradient within C1, so the
    // mean of the clipped norms cannot exceed it either.
    CHECK(res.mean_clipped_grad_norm <= cfg.grad_clip * (1.0 + 1e-12));
  }
}

TEST_CASE("epochs mode takes tau * ceil(n / batch) steps") {
  RngStream s(6);
  const ClientDataset data = tiny_regression(s, 11, 2);
  Model m = Model::linear(2);
  TrainingConfig cfg;
  cfg.local_steps = 3;
  cfg.local_mode = LocalMode::epochs;
  cfg.batch_size = 4;  // ceil(11/4) = 3 steps per epoch
  const LocalTrainResult res = local_train(m, data, cfg, s.fork(1));
  CHECK(res.steps_taken == 9);
  CHECK(planned_local_steps(cfg, 11) == 9);
  cfg.local_mode = LocalMode::steps;
  CHECK(planned_local_steps(cfg, 11) == 3);
}

TEST_CASE("local_train rejects an empty dataset") {
  ClientDataset empty;
  empty.cols = 2;
  const Model m = Model::linear(2);
  CHECK_THROWS_AS(local_train(m, empty, TrainingConfig{}, RngStream(1)), std::invalid_argument);
}

TEST_CASE("full-batch descent on a quadratic decreases the loss monotonically") {
  RngStream s(8);
  const ClientDataset data = tiny_regression(s, 30, 3);
  Model m = Model::linear(3);
  RngStream init = s.fork(1);
  m.params = gaussian_sample(init, m.dim(), 1.0);
  TrainingConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.local_steps = 1;
  cfg.batch_size = 30;
  cfg.grad_clip = 1e9;  // effectively unclipped
  double prev = full_loss_and_gradient(m, data).loss;
  for (int it = 0; it < 20; ++it) {
    const LocalTrainResult res = local_train(m, data, cfg, s.fork(10 + it));
    add_in_place(m.params, res.delta);
    const double now = full_loss_and_gradient(m, data).loss;
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("local_train is a pure function of its arguments") {
  RngStream s(9);
  const ClientDataset data = tiny_regression(s, 16, 3);
  Model m = Model::linear(3);
  RngStream init = s.fork(1);
  m.params = gaussian_sample(init, m.dim(), 1.0);
  TrainingConfig cfg;
  cfg.local_steps = 3;
  cfg.batch_size = 5;
  const LocalTrainResult a = local_train(m, data, cfg, s.fork(2));
  const LocalTrainResult b = local_train(m, data, cfg, s.fork(2));
  CHECK(a.delta == b.delta);
  CHECK(a.steps_taken == b.steps_taken);
}

TEST_CASE("federation generation is deterministic") {
  FederationParams fp;
  fp.population = 4;
  fp.samples_per_client = 10;
  fp.heterogeneity = 0.5;
  const auto a = make_synthetic_federation(fp, RngStream(55).fork(1));
  const auto b = make_synthetic_federation(fp, RngStream(55).fork(1));
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].targets == b[i].targets);
  }
}

TEST_CASE("IID federation has matching per-client feature means") {
  FederationParams fp;
  fp.population = 3;
  fp.samples_per_client = 4000;
  fp.features = 3;
  fp.classes = 2;
  fp.heterogeneity = 0.0;
  const auto clients = make_synthetic_federation(fp, RngStream(66));
  std::vector<ModelVector> means;
  for (const auto& c : clients) {
    ModelVector mean(fp.features, 0.0);
    for (std::size_t i = 0; i < c.rows; ++i) {
      for (std::size_t j = 0; j < fp.features; ++j) mean[j] += c.row(i)[j];
    }
    for (double& v : mean) v /= static_cast<double>(c.rows);
    means.push_back(mean);
  }
  for (std::size_t j = 0; j < fp.features; ++j) {
    CHECK(std::abs(means[0][j] - means[1][j]) < 0.15);
    CHECK(std::abs(means[0][j] - means[2][j]) < 0.15);
  }
}

TEST_CASE("fully skewed two-client federation concentrates labels") {
  FederationParams fp;
  fp.population = 2;
  fp.samples_per_client = 200;
  fp.features = 3;
  fp.classes = 2;
  fp.heterogeneity = 1.0;
  const auto clients = make_synthetic_federation(fp, RngStream(77));
  for (std::size_t i = 0; i < 2; ++i) {
    std::size_t preferred = 0;
    for (double t : clients[i].targets) {
      if (static_cast<std::size_t>(t) == i) ++preferred;
    }
    CHECK(static_cast<double>(preferred) / 200.0 >= 0.9);
  }
}

TEST_CASE("digit task is seven segments wide with ten classes") {
  FederationParams fp;
  fp.task = TaskKind::digits;
  fp.population = 2;
  fp.samples_per_client = 50;
  const auto clients = make_synthetic_federation(fp, RngStream(88));
  CHECK(clients[0].cols == 7);
  double max_label = 0.0;
  for (double t : clients[0].targets) max_label = std::max(max_label, t);
  CHECK(max_label <= 9.0);
  const ClientDataset test = make_test_dataset(fp, RngStream(88));
  CHECK(test.cols == 7);
  CHECK(test.rows == fp.test_samples);
}

TEST_CASE("evaluate reports loss and accuracy") {
  FederationParams fp;
  fp.population = 1;
  fp.samples_per_client = 300;
  fp.features = 4;
  fp.classes = 3;
  fp.noise_std = 0.2;  // well-separated blobs
  const ClientDataset data = make_synthetic_federation(fp, RngStream(99)).front();
  Model m = Model::logistic(4, 3);
  TrainingConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.local_steps = 60;
  cfg.batch_size = 300;
  cfg.grad_clip = 1e9;
  const LocalTrainResult res = local_train(m, data, cfg, RngStream(100));
  add_in_place(m.params, res.delta);
  const Evaluation ev = evaluate(m, data);
  CHECK(ev.accuracy > 0.9);
  CHECK(ev.loss < std::log(3.0));
}
