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

#ifndef PFELS_CHANNEL_HPP
#define PFELS_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pfels/numerics.hpp"

namespace pfels {

// Exponential fading with truncation; gains stay constant within a round.
struct GainDistribution {
  double mean = 0.02;
  double lo = 0.0001;
  double hi = 0.1;
};

// Per-round channel state for the selected cohort. Phase is assumed
// pre-compensated at the devices, so only magnitudes appear.
struct ChannelRealization {
  std::vector<double> gains;  // |h_i|, one per selected device, cohort order
  double noise_std = 0.0;     // sigma_0
  int subcarriers = 1;        // K, symbols per slot
};

inline ChannelRealization draw_channel(std::size_t selected, const GainDistribution& dist,
                                       double noise_std, int subcarriers, RngStream stream) {
  if (!(dist.lo > 0.0) || !(dist.hi >= dist.lo)) {
    throw std::invalid_argument("draw_channel: need 0 < lo <= hi");
  }
  if (!(dist.mean > 0.0)) throw std::invalid_argument("draw_channel: mean must be positive");
  if (noise_std < 0.0) throw std::invalid_argument("draw_channel: noise_std must be >= 0");
  if (subcarriers < 1) throw std::invalid_argument("draw_channel: subcarriers must be >= 1");
  ChannelRealization ch;
  ch.noise_std = noise_std;
  ch.subcarriers = subcarriers;
  ch.gains.resize(selected);
  for (double& g : ch.gains) {
    const double u = stream.next_double();               // [0, 1)
    const double raw = -dist.mean * std::log1p(-u);      // Exp(mean) via inverse CDF
    g = std::clamp(raw, dist.lo, dist.hi);
  }
  return ch;
}

// y = sum_i gains[i] * signals[i] + z,  z ~ N(0, noise_std^2 I_k).
// Summation runs in index order; callers keep signals in ascending client-id
// order so results are reproducible despite float non-associativity.
inline ModelVector aircomp_transmit(const std::vector<ModelVector>& signals,
                                    const std::vector<double>& gains, double noise_std,
                                    RngStream stream) {
  if (signals.empty()) throw std::invalid_argument("aircomp_transmit: no signals");
  if (signals.size() != gains.size()) {
    throw std::invalid_argument("aircomp_transmit: signals/gains size mismatch");
  }
  const std::size_t k = signals.front().size();
  for (const auto& s : signals) {
    if (s.size() != k) throw std::invalid_argument("aircomp_transmit: signal length mismatch");
  }
  ModelVector y = gaussian_sample(stream, k, noise_std);
  for (std::size_t i = 0; i < signals.size(); ++i) {
    if (!(gains[i] > 0.0)) throw std::invalid_argument("aircomp_transmit: gains must be positive");
    axpy_in_place(y, gains[i], signals[i]);
  }
  assert_finite(y, "aircomp_transmit");
  return y;
}

// Cumulative ||x||^2 energy and transmitted-symbol counts per device.
class EnergyLedger {
 public:
  EnergyLedger() = default;
  explicit EnergyLedger(std::size_t devices) : energy_(devices, 0.0), uses_(devices, 0) {}

  void record(std::size_t device, const ModelVector& x) {
    ensure(device);
    energy_[device] += l2_norm_sq(x);
    uses_[device] += x.size();
  }

  double energy(std::size_t device) const { return device < energy_.size() ? energy_[device] : 0.0; }
  std::uint64_t subcarrier_uses(std::size_t device) const {
    return device < uses_.size() ? uses_[device] : 0;
  }

  double total_energy() const {
    double s = 0.0;
    for (double e : energy_) s += e;
    return s;
  }

  std::uint64_t total_subcarrier_uses() const {
    std::uint64_t s = 0;
    for (std::uint64_t u : uses_) s += u;
    return s;
  }

 private:
  void ensure(std::size_t device) {
    if (device >= energy_.size()) {
      energy_.resize(device + 1, 0.0);
      uses_.resize(device + 1, 0);
    }
  }

  std::vector<double> energy_;
  std::vector<std::uint64_t> uses_;
};

// Time slots a device needs to push k symbols through K subcarriers.
inline std::uint64_t slots_needed(std::uint64_t k, std::uint64_t subcarriers) {
  if (subcarriers < 1) throw std::invalid_argument("slots_needed: subcarriers must be >= 1");
  return (k + subcarriers - 1) / subcarriers;
}

}  // namespace pfels

#endif  // PFELS_CHANNEL_HPP
