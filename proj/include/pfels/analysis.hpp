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

#ifndef PFELS_ANALYSIS_HPP
#define PFELS_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pfels/learner.hpp"
#include "pfels/numerics.hpp"
#include "pfels/power.hpp"
#include "pfels/privacy.hpp"

namespace pfels {

// Inputs of the convergence bound. `steps` plays the role of the aggregation
// period; `betas` holds the per-round alignment sequence (size 1 means
// constant over rounds).
struct BoundConstants {
  double smoothness = 1.0;     // L
  double gamma_sq = 1.0;       // >= 1
  double kappa_sq = 0.0;
  double grad_variance = 0.0;  // zeta-bar^2
  double init_gap = 1.0;       // f(theta_0) - f_inf
  double learning_rate = 0.1;
  int steps = 1;
  std::size_t cohort = 1;     // r
  std::size_t model_dim = 1;  // d
  std::size_t kept_dim = 1;   // k
  double noise_std = 0.0;     // sigma_0
  int rounds = 1;             // T
  std::vector<double> betas{1.0};

  double lambda_k() const {
    return 1.0 - static_cast<double>(kept_dim) / static_cast<double>(model_dim);
  }

  // eta <= min{ 1/(24 tau L (lambda+1) gamma^2), 1/(4 tau L sqrt(4 gamma^2+2)),
  //             1/(12 tau L) }.
  bool step_size_condition_holds() const {
    const double tau_l = static_cast<double>(steps) * smoothness;
    if (tau_l <= 0.0) return true;
    const double cap = std::min({1.0 / (24.0 * tau_l * (lambda_k() + 1.0) * gamma_sq),
                                 1.0 / (4.0 * tau_l * std::sqrt(4.0 * gamma_sq + 2.0)),
                                 1.0 / (12.0 * tau_l)});
    return learning_rate <= cap;
  }
};

// The three additive pieces of the mean-squared-gradient bound.
struct BoundTerms {
  double optimization = 0.0;
  double compression = 0.0;
  double privacy = 0.0;
  double total = 0.0;
  bool step_size_ok = true;
};

inline BoundTerms convergence_bound(const BoundConstants& c) {
  if (c.kept_dim < 1 || c.kept_dim > c.model_dim) {
    throw std::invalid_argument("convergence_bound: need 1 <= k <= d");
  }
  if (c.rounds < 1 || c.steps < 1 || !(c.learning_rate > 0.0)) {
    throw std::invalid_argument("convergence_bound: rounds, steps, learning_rate must be positive");
  }
  if (c.gamma_sq < 1.0 || c.kappa_sq < 0.0 || c.grad_variance < 0.0 || c.smoothness < 0.0) {
    throw std::invalid_argument("convergence_bound: dissimilarity/variance constants out of range");
  }
  if (c.betas.empty()) throw std::invalid_argument("convergence_bound: beta sequence is empty");

  BoundTerms out;
  out.step_size_ok = c.step_size_condition_holds();
  const double eta_tau = c.learning_rate * static_cast<double>(c.steps);
  const double t_rounds = static_cast<double>(c.rounds);
  const double r = static_cast<double>(c.cohort);

  out.optimization = 8.0 * c.init_gap / (t_rounds * eta_tau) +
                     8.0 * eta_tau * c.smoothness * (3.0 * c.kappa_sq + 2.0 * c.grad_variance);

  out.compression = 8.0 *
                    (eta_tau * c.smoothness * (2.0 * c.kappa_sq + c.grad_variance) +
                     1.5 * c.grad_variance) *
                    c.lambda_k() / r;

  if (c.noise_std > 0.0) {
    double inv_beta_sq_sum = 0.0;
    for (int t = 0; t < c.rounds; ++t) {
      const double beta = c.betas[c.betas.size() == 1 ? 0 : static_cast<std::size_t>(t)];
      if (!(beta > 0.0)) {
        inv_beta_sq_sum = std::numeric_limits<double>::infinity();
        break;
      }
      inv_beta_sq_sum += 1.0 / (beta * beta);
    }
    out.privacy = 4.0 * c.smoothness * static_cast<double>(c.kept_dim) * c.noise_std *
                  c.noise_std / (eta_tau * r * r * r * t_rounds) * inv_beta_sq_sum;
  }

  out.total = out.optimization + out.compression + out.privacy;
  return out;
}

// Channel/power/privacy context for sweeping the bound over k: a
// representative cohort realization plus the DP budget.
struct SweepInputs {
  std::vector<double> gains;
  std::vector<double> budgets;
  double grad_clip = 1.0;  // C1
  double epsilon = 1.0;
  double delta = 1e-3;
  std::size_t population = 1;  // N
};

struct CompressionSweepRow {
  std::size_t k = 0;
  double beta = 0.0;
  BoundTerms terms;
};

struct CompressionSweepResult {
  std::size_t best_k = 0;
  std::vector<CompressionSweepRow> table;
};

// Evaluate the bound at every k in [1, d] with beta chosen by the optimal
// per-round rule for that k. Ties go to the smaller k.
inline CompressionSweepResult optimal_compression_sweep(const BoundConstants& base,
                                                        const SweepInputs& in) {
  if (base.model_dim < 2) throw std::invalid_argument("optimal_compression_sweep: need d >= 2");
  std::optional<double> c2;
  if (base.noise_std > 0.0) {
    c2 = pfels_c2(base.learning_rate, base.steps, in.grad_clip, base.cohort, in.population,
                  in.delta, base.noise_std);
  }
  CompressionSweepResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= base.model_dim; ++k) {
    double beta;
    if (c2) {
      beta = beta_pfels(in.gains, in.budgets, base.model_dim, k, base.learning_rate, base.steps,
                        in.grad_clip, in.epsilon, *c2)
                 .beta;
    } else {
      beta = beta_power_cap(in.gains, in.budgets, base.model_dim, k, base.learning_rate,
                            base.steps, in.grad_clip);
    }
    BoundConstants c = base;
    c.kept_dim = k;
    c.betas = {beta};
    CompressionSweepRow row;
    row.k = k;
    row.beta = beta;
    row.terms = convergence_bound(c);
    if (row.terms.total < best) {
      best = row.terms.total;
      out.best_k = k;
    }
    out.table.push_back(row);
  }
  return out;
}

// Empirical stand-ins for the bound's constants. These are estimates, not
// certified values; callers should treat them as diagnostics.
struct BoundEstimates {
  double smoothness = 0.0;
  double grad_variance = 0.0;
  double gamma_sq = 1.0;
  double kappa_sq = 0.0;
  double init_gap = 0.0;
};

namespace detail {

inline ModelVector global_gradient(const Model& m, const std::vector<ClientDataset>& clients) {
  ModelVector g(m.dim(), 0.0);
  for (const auto& data : clients) {
    axpy_in_place(g, 1.0 / static_cast<double>(clients.size()),
                  full_loss_and_gradient(m, data).grad);
  }
  return g;
}

inline double global_loss(const Model& m, const std::vector<ClientDataset>& clients) {
  double s = 0.0;
  for (const auto& data : clients) s += full_loss_and_gradient(m, data).loss;
  return s / static_cast<double>(clients.size());
}

}  // namespace detail

inline BoundEstimates estimate_constants(const Model& model,
                                         const std::vector<ClientDataset>& clients,
                                         std::size_t batch_size, std::size_t probes,
                                         RngStream stream) {
  if (probes < 2) throw std::invalid_argument("estimate_constants: need probes >= 2");
  if (clients.empty()) throw std::invalid_argument("estimate_constants: no clients");
  BoundEstimates est;
  const std::size_t dim = model.dim();

  // Smoothness: largest observed gradient-difference ratio, sharpened by
  // power iteration on the difference direction so quadratic objectives
  // recover their top curvature instead of a random Rayleigh quotient.
  {
    RngStream s = stream.fork(1);
    const double offset = 1e-3;
    for (std::size_t p = 0; p < probes; ++p) {
      Model at = model;
      RngStream sp = s.fork(p);
      if (p > 0) axpy_in_place(at.params, 1.0, gaussian_sample(sp, dim, 0.5));
      for (const auto& data : clients) {
        const ModelVector g0 = full_loss_and_gradient(at, data).grad;
        ModelVector dir = gaussian_sample(sp, dim, 1.0);
        for (int it = 0; it < 12; ++it) {
          const double norm = l2_norm(dir);
          if (!(norm > 0.0)) break;
          Model shifted = at;
          axpy_in_place(shifted.params, offset / norm, dir);
          const ModelVector diff =
              subtracted(full_loss_and_gradient(shifted, data).grad, g0);
          const double ratio = l2_norm(diff) / offset;
          est.smoothness = std::max(est.smoothness, ratio);
          dir = diff;
        }
      }
    }
  }

  // Mini-batch gradient variance around the full-batch gradient.
  {
    RngStream s = stream.fork(2);
    double acc = 0.0;
    for (std::size_t ci = 0; ci < clients.size(); ++ci) {
      const auto& data = clients[ci];
      const ModelVector full = full_loss_and_gradient(model, data).grad;
      const std::size_t b = std::min<std::size_t>(batch_size, data.rows);
      RngStream sc = s.fork(ci);
      double client_acc = 0.0;
      for (std::size_t p = 0; p < probes; ++p) {
        std::vector<std::size_t> idx = all_rows(data);
        std::vector<std::size_t> batch(b);
        for (std::size_t j = 0; j < b; ++j) {
          const std::size_t at = j + static_cast<std::size_t>(sc.next_below(data.rows - j));
          std::swap(idx[j], idx[at]);
          batch[j] = idx[j];
        }
        client_acc += l2_norm_sq(subtracted(loss_and_gradient(model, data, batch).grad, full));
      }
      acc += client_acc / static_cast<double>(probes);
    }
    est.grad_variance = acc / static_cast<double>(clients.size());
  }

  // Dissimilarity: least-squares fit of mean ||grad_i||^2 against
  // ||mean grad||^2 over probe points, clamped into the admissible range.
  {
    RngStream s = stream.fork(3);
    std::vector<double> xs, ys;
    for (std::size_t p = 0; p < probes; ++p) {
      Model at = model;
      RngStream sp = s.fork(p);
      if (p > 0) axpy_in_place(at.params, 1.0, gaussian_sample(sp, dim, 0.5));
      double mean_sq = 0.0;
      ModelVector mean_grad(dim, 0.0);
      for (const auto& data : clients) {
        const ModelVector g = full_loss_and_gradient(at, data).grad;
        mean_sq += l2_norm_sq(g) / static_cast<double>(clients.size());
        axpy_in_place(mean_grad, 1.0 / static_cast<double>(clients.size()), g);
      }
      xs.push_back(l2_norm_sq(mean_grad));
      ys.push_back(mean_sq);
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    double slope = 1.0, intercept = 0.0;
    if (std::abs(denom) > 1e-30) {
      slope = (n * sxy - sx * sy) / denom;
      intercept = (sy - slope * sx) / n;
    }
    est.gamma_sq = std::max(1.0, slope);
    est.kappa_sq = std::max(0.0, intercept);
  }

  // Optimality gap: descend the global objective with full-batch gradient
  // steps and take the best value seen as the f_inf stand-in.
  {
    Model at = model;
    const double f0 = detail::global_loss(at, clients);
    double best = f0;
    const double eta = est.smoothness > 0.0 ? 0.5 / est.smoothness : 0.1;
    const int descent_steps = 200;
    for (int it = 0; it < descent_steps; ++it) {
      axpy_in_place(at.params, -eta, detail::global_gradient(at, clients));
      best = std::min(best, detail::global_loss(at, clients));
    }
    est.init_gap = std::max(0.0, f0 - best);
  }

  return est;
}

}  // namespace pfels

#endif  // PFELS_ANALYSIS_HPP
