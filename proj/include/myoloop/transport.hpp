// Copyright 2026 The myoloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// 1-D Wasserstein distances between per-channel sample sets and the
// weighted-superposition objective the continuous controller minimizes.

#include <cstdint>
#include <span>
#include <vector>

#include "myoloop/signal.hpp"
#include "myoloop/types.hpp"

namespace myoloop {

/// Sorts each channel of a window.
ChannelSamples to_samples(const EmgWindow& window);

using WeightVector = std::vector<double>;

/// Linear quantile interpolation of a sorted array onto m points.
std::vector<double> resample_sorted(std::span<const double> sorted, std::size_t m);

/// Order-statistic W1. Inputs must be sorted; unequal lengths are resampled
/// to the longer one.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Superposition loss for one control step. The permutation applied to each
/// bank channel is drawn once from `perm_seed`, so repeated evaluations
/// inside a step see the same coupling. Evaluation caches sort orders and is
/// not safe to share between threads.
class MixtureObjective {
 public:
  MixtureObjective(std::span<const ChannelSamples> banks, std::uint64_t perm_seed);

  std::size_t references() const noexcept { return permuted_.size(); }
  std::size_t bank_size() const noexcept { return n_; }

  ChannelSamples superpose(std::span<const double> w) const;

  /// Mean over channels of W1(live_c, superpose(w)_c).
  double distance(const ChannelSamples& live, std::span<const double> w) const;

  /// Same as distance() with a live set already resampled to bank_size().
  double distance_prepared(const ChannelSamples& live, std::span<const double> w) const;

  ChannelSamples prepare(const ChannelSamples& live) const;

 private:
  void check_weights(std::span<const double> w) const;

  std::vector<ChannelArray> permuted_;
  // permuted_ regrouped per channel as [sample][reference]
  std::array<std::vector<double>, kChannels> interleaved_;
  std::size_t n_ = 0;
  mutable std::vector<double> scratch_;
  mutable std::array<std::vector<std::uint32_t>, kChannels> order_;
};

ChannelSamples superpose(std::span<const ChannelSamples> banks, std::span<const double> w,
                         std::uint64_t perm_seed = 0);

double distance(const ChannelSamples& live, std::span<const ChannelSamples> banks,
                std::span<const double> w, std::uint64_t perm_seed = 0);

/// Finite-difference gradient of distance() in w; central inside the box,
/// one-sided where a +-h probe would leave [0,1].
WeightVector fd_gradient(const MixtureObjective& objective, const ChannelSamples& prepared_live,
                         std::span<const double> w, double h = 1e-2);

WeightVector fd_gradient(const ChannelSamples& live, std::span<const ChannelSamples> banks,
                         std::span<const double> w, double h = 1e-2, std::uint64_t perm_seed = 0);

}  // namespace myoloop
