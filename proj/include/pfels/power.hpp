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

#ifndef PFELS_POWER_HPP
#define PFELS_POWER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfels/numerics.hpp"
#include "pfels/privacy.hpp"
#include "pfels/sparsifier.hpp"

namespace pfels {

enum class PowerRegime { power_limited, privacy_limited };

inline const char* to_string(PowerRegime r) {
  return r == PowerRegime::power_limited ? "power_limited" : "privacy_limited";
}

// One round's alignment decision. alpha_i = beta / |h_i| keeps
// |h_i| alpha_i = beta for every selected device.
struct PowerDecision {
  double beta = 0.0;
  std::vector<double> alphas;
  PowerRegime regime = PowerRegime::power_limited;
};

namespace detail {

inline void check_cohort_inputs(const std::vector<double>& gains,
                                const std::vector<double>& budgets) {
  if (gains.empty()) throw std::invalid_argument("power: empty cohort");
  if (gains.size() != budgets.size()) {
    throw std::invalid_argument("power: gains/budgets size mismatch");
  }
  for (double g : gains) {
    if (!(g > 0.0)) throw std::invalid_argument("power: gains must be positive");
  }
  for (double p : budgets) {
    if (!(p > 0.0)) throw std::invalid_argument("power: budgets must be positive");
  }
}

inline std::vector<double> alphas_for(const std::vector<double>& gains, double beta) {
  std::vector<double> alphas(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) alphas[i] = beta / gains[i];
  return alphas;
}

}  // namespace detail

// Largest beta that keeps every device's expected transmit energy within
// budget when the update norm is at its clipped worst case:
// min_i |h_i| sqrt(d P_i) / (C1 eta steps sqrt(k)).
inline double beta_power_cap(const std::vector<double>& gains, const std::vector<double>& budgets,
                             std::size_t d, std::size_t k, double learning_rate, int steps,
                             double grad_clip) {
  detail::check_cohort_inputs(gains, budgets);
  if (k < 1 || k > d) throw std::invalid_argument("beta_power_cap: need 1 <= k <= d");
  if (!(learning_rate > 0.0) || steps < 1 || !(grad_clip > 0.0)) {
    throw std::invalid_argument("beta_power_cap: learning_rate, steps, grad_clip must be positive");
  }
  const double denom = grad_clip * learning_rate * static_cast<double>(steps) *
                       std::sqrt(static_cast<double>(k));
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    cap = std::min(cap, gains[i] * std::sqrt(static_cast<double>(d) * budgets[i]) / denom);
  }
  return cap;
}

// Optimal per-round alignment under both the power and the DP constraint:
// beta* = min(power cap, eps / C2). Ties go to power_limited.
inline PowerDecision beta_pfels(const std::vector<double>& gains,
                                const std::vector<double>& budgets, std::size_t d, std::size_t k,
                                double learning_rate, int steps, double grad_clip, double epsilon,
                                double c2) {
  const double cap = beta_power_cap(gains, budgets, d, k, learning_rate, steps, grad_clip);
  const double privacy_cap = privacy_beta_cap(c2, epsilon);
  PowerDecision out;
  if (cap <= privacy_cap) {
    out.beta = cap;
    out.regime = PowerRegime::power_limited;
  } else {
    out.beta = privacy_cap;
    out.regime = PowerRegime::privacy_limited;
  }
  out.alphas = detail::alphas_for(gains, out.beta);
  return out;
}

// Full-dimension baseline without a DP constraint:
// beta = min_i |h_i| sqrt(P_i) / (C1 eta steps).
inline PowerDecision beta_wflp(const std::vector<double>& gains,
                               const std::vector<double>& budgets, double learning_rate, int steps,
                               double grad_clip) {
  detail::check_cohort_inputs(gains, budgets);
  if (!(learning_rate > 0.0) || steps < 1 || !(grad_clip > 0.0)) {
    throw std::invalid_argument("beta_wflp: learning_rate, steps, grad_clip must be positive");
  }
  const double denom = grad_clip * learning_rate * static_cast<double>(steps);
  PowerDecision out;
  out.beta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    out.beta = std::min(out.beta, gains[i] * std::sqrt(budgets[i]) / denom);
  }
  out.regime = PowerRegime::power_limited;
  out.alphas = detail::alphas_for(gains, out.beta);
  return out;
}

// Full-dimension baseline with the DP constraint; c2_full comes from the same
// feasibility constant (sensitivity does not depend on the dimension).
inline PowerDecision beta_wflpdp(const std::vector<double>& gains,
                                 const std::vector<double>& budgets, double learning_rate,
                                 int steps, double grad_clip, double epsilon, double c2_full) {
  PowerDecision base = beta_wflp(gains, budgets, learning_rate, steps, grad_clip);
  const double privacy_cap = privacy_beta_cap(c2_full, epsilon);
  if (base.beta <= privacy_cap) return base;
  PowerDecision out;
  out.beta = privacy_cap;
  out.regime = PowerRegime::privacy_limited;
  out.alphas = detail::alphas_for(gains, out.beta);
  return out;
}

// One round of problem P2 phrased for exhaustive search.
struct P2Instance {
  std::vector<double> gains;
  std::vector<double> budgets;
  std::size_t d = 1;
  std::size_t k = 1;
  double learning_rate = 0.1;
  int steps = 1;
  double grad_clip = 1.0;
  double epsilon = 1.0;
  double c2 = 1.0;
};

// Worst-case expected transmit energy of a clipped, Rand-k-projected update
// at unit alignment: (k/d) (eta steps C1)^2.
inline double p2_worst_case_energy(const P2Instance& inst) {
  const double norm_bound =
      inst.learning_rate * static_cast<double>(inst.steps) * inst.grad_clip;
  return (static_cast<double>(inst.k) / static_cast<double>(inst.d)) * norm_bound * norm_bound;
}

// Raw P2 feasibility of an alignment value: the DP check C2 beta <= eps and
// each device's expected transmit energy within budget. Deliberately checks
// the energy expression device by device instead of the closed form's
// rearranged cap.
inline bool p2_feasible(const P2Instance& inst, double beta) {
  if (inst.c2 * beta > inst.epsilon) return false;
  const double worst_energy = p2_worst_case_energy(inst);
  for (std::size_t i = 0; i < inst.gains.size(); ++i) {
    const double scale = beta / inst.gains[i];
    if (scale * scale * worst_energy > inst.budgets[i]) return false;
  }
  return true;
}

// Upper end of the search grid: above every single-constraint cap, so the
// maximizer is interior to the grid.
inline double p2_grid_upper(const P2Instance& inst) {
  const double worst_energy = p2_worst_case_energy(inst);
  double upper = inst.epsilon / inst.c2;
  for (std::size_t i = 0; i < inst.gains.size(); ++i) {
    upper = std::max(upper, inst.gains[i] * std::sqrt(inst.budgets[i] / worst_energy));
  }
  return upper * 1.5;
}

// Grid search for the per-round P2 maximizer. The grid descends
// geometrically from the upper bound with relative spacing grid_resolution;
// the feasible set is an interval (0, beta*], so the first feasible grid
// point is the best one. Agreement with beta_pfels within one grid step
// certifies the closed form.
inline double p2_bruteforce_oracle(const P2Instance& inst, double grid_resolution) {
  if (!(grid_resolution > 0.0) || grid_resolution >= 1.0) {
    throw std::invalid_argument("p2_bruteforce_oracle: grid_resolution must lie in (0, 1)");
  }
  if (!(inst.epsilon > 0.0) || !std::isfinite(inst.epsilon)) {
    throw std::invalid_argument("p2_bruteforce_oracle: epsilon must be positive and finite");
  }
  if (!(inst.c2 > 0.0) || !std::isfinite(inst.c2)) {
    throw std::invalid_argument("p2_bruteforce_oracle: c2 must be positive and finite");
  }
  detail::check_cohort_inputs(inst.gains, inst.budgets);
  const double upper = p2_grid_upper(inst);
  const double shrink = 1.0 / (1.0 + grid_resolution);
  for (double beta = upper; beta > upper * 1e-12; beta *= shrink) {
    if (p2_feasible(inst, beta)) return beta;
  }
  return 0.0;
}

// Monte-Carlo (exhaustive for small d) check of the worst-case projected
// update energy: E ||A delta||^2 <= (k/d) (eta steps C1)^2 for any update
// whose norm respects the clipped-step bound.
inline bool projected_energy_within_bound(const ModelVector& update, std::size_t k, double learning_rate,
                                int steps, double grad_clip, std::size_t trials,
                                RngStream stream) {
  const std::size_t d = update.size();
  if (d == 0 || k < 1 || k > d) throw std::invalid_argument("projected_energy_within_bound: bad dimensions");
  const double norm_bound = learning_rate * static_cast<double>(steps) * grad_clip;
  if (l2_norm(update) > norm_bound * (1.0 + 1e-9)) {
    throw std::invalid_argument("projected_energy_within_bound: update exceeds the clipped-norm bound");
  }
  const double bound = (static_cast<double>(k) / static_cast<double>(d)) * norm_bound * norm_bound;
  if (d <= detail::kEnumerationMaxDim) {
    const double mean = l2_norm_sq(update) - variance_oracle(d, k, update);
    return mean <= bound + 1e-12;
  }
  if (trials < 2) throw std::invalid_argument("projected_energy_within_bound: need at least 2 trials");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const RandKProjection p = generate_projection(d, k, stream.fork(t));
    const double e = l2_norm_sq(project(p, update));
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean) * n / (n - 1.0);
  const double stderr_mean = std::sqrt(var / n);
  return mean <= bound + 3.0 * stderr_mean;
}

}  // namespace pfels

#endif  // PFELS_POWER_HPP
