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

#ifndef PFELS_PRIVACY_HPP
#define PFELS_PRIVACY_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "pfels/numerics.hpp"

namespace pfels {

// Client-level (epsilon, delta) target plus the sampling frame it applies to.
struct PrivacySpec {
  double epsilon = 1.0;
  double delta = 1e-3;   // defaults to 1/N at config resolution
  std::size_t cohort = 1;      // r, sampled per round
  std::size_t population = 1;  // N
};

// Everything the update-sum sensitivity depends on. `steps` is the realized
// SGD step count, not the configured epoch count.
struct SensitivityContext {
  double learning_rate = 0.0;  // eta
  int steps = 0;
  double grad_clip = 0.0;      // C1
  double beta = 0.0;           // alignment coefficient
};

// l2 sensitivity of the aligned, sparsified update sum across neighboring
// cohorts: beta * eta * steps * C1. Coordinate selection cannot increase a
// norm, so the bound holds for every Rand-k draw.
inline double sensitivity_bound(const SensitivityContext& ctx) {
  if (ctx.beta < 0.0 || ctx.learning_rate < 0.0 || ctx.steps < 0 || ctx.grad_clip < 0.0) {
    throw std::invalid_argument("sensitivity_bound: negative inputs");
  }
  return ctx.beta * ctx.learning_rate * static_cast<double>(ctx.steps) * ctx.grad_clip;
}

// The classical Gaussian-mechanism derivation assumes epsilon in (0, 1];
// larger budgets are still accepted (the experiment protocol sweeps past 1)
// but callers can surface this flag.
inline bool classic_range_warning(double epsilon) { return epsilon > 1.0; }

// Minimal noise std for (epsilon, delta)-DP with the given l2 sensitivity:
// sigma = psi * sqrt(2 ln(1.25/delta)) / epsilon.
inline double gaussian_sigma(double sensitivity, double epsilon, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::domain_error("gaussian_sigma: delta must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::domain_error("gaussian_sigma: epsilon must be positive");
  if (sensitivity < 0.0) throw std::domain_error("gaussian_sigma: sensitivity must be >= 0");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

// Privacy amplification by uniform subsampling of n out of m records:
// (eps, delta) -> (log(1 + n(e^eps - 1)/m), n delta / m).
inline std::pair<double, double> amplify_by_subsampling(double epsilon, double delta,
                                                        std::size_t n, std::size_t m) {
  if (n > m) throw std::domain_error("amplify_by_subsampling: need n <= m");
  if (m == 0) throw std::domain_error("amplify_by_subsampling: empty dataset");
  const double ratio = static_cast<double>(n) / static_cast<double>(m);
  const double eps_out = std::log1p(ratio * std::expm1(epsilon));
  return {eps_out, ratio * delta};
}

// Per-round DP feasibility constant: the round is (epsilon, delta)-DP from
// channel noise alone iff C2 * beta <= epsilon, with
//   C2 = 2 sqrt(2) eta steps C1 r sqrt(log(1.25 r / (N delta))) / (N sigma0).
inline double pfels_c2(double learning_rate, int steps, double grad_clip, std::size_t cohort,
                       std::size_t population, double delta, double noise_std) {
  if (!(noise_std > 0.0)) {
    throw std::domain_error("pfels_c2: intrinsic privacy needs channel noise (sigma0 > 0)");
  }
  if (cohort < 1 || population < cohort) {
    throw std::domain_error("pfels_c2: need 1 <= cohort <= population");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::domain_error("pfels_c2: delta must lie in (0, 1)");
  const double r = static_cast<double>(cohort);
  const double n = static_cast<double>(population);
  const double log_arg = 1.25 * r / (n * delta);
  if (!(log_arg > 1.0)) {
    throw std::domain_error("pfels_c2: log argument 1.25 r / (N delta) must exceed 1");
  }
  return 2.0 * std::sqrt(2.0) * learning_rate * static_cast<double>(steps) * grad_clip * r *
         std::sqrt(std::log(log_arg)) / (n * noise_std);
}

inline bool pfels_round_is_private(double beta, double c2, double epsilon) {
  return c2 * beta <= epsilon;
}

// Largest beta whose feasibility check passes in double arithmetic. eps/c2
// can round up just past the boundary, so walk down by ulps until the
// inequality itself holds.
inline double privacy_beta_cap(double c2, double epsilon) {
  if (!(c2 > 0.0)) throw std::domain_error("privacy_beta_cap: c2 must be positive");
  if (!(epsilon > 0.0)) throw std::domain_error("privacy_beta_cap: epsilon must be positive");
  if (std::isinf(epsilon)) return std::numeric_limits<double>::infinity();
  double beta = epsilon / c2;
  while (!pfels_round_is_private(beta, c2, epsilon)) {
    beta = std::nextafter(beta, 0.0);
  }
  return beta;
}

// Update perturbation of the artificial-noise baseline: clip to C, then add
// N(0, C^2 sigma^2 I / r) so the cohort sum carries variance C^2 sigma^2.
inline ModelVector dpfedavg_perturb(const ModelVector& update, double clip, double noise_multiplier,
                                    std::size_t cohort, RngStream stream) {
  if (!(clip > 0.0)) throw std::invalid_argument("dpfedavg_perturb: clip must be positive");
  if (noise_multiplier < 0.0) {
    throw std::invalid_argument("dpfedavg_perturb: noise multiplier must be >= 0");
  }
  if (cohort < 1) throw std::invalid_argument("dpfedavg_perturb: cohort must be >= 1");
  ModelVector out = clip_to_norm(update, clip);
  const double std_dev = clip * noise_multiplier / std::sqrt(static_cast<double>(cohort));
  if (std_dev > 0.0) {
    for (double& x : out) x += std_dev * stream.next_gaussian();
  }
  return out;
}

}  // namespace pfels

#endif  // PFELS_PRIVACY_HPP
