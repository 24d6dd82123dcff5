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

#include "myoloop/transport.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "myoloop/error.hpp"

namespace myoloop {

ChannelSamples to_samples(const EmgWindow& window) {
  ChannelSamples s;
  for (std::size_t c = 0; c < kChannels; ++c) {
    s.ch[c] = window.samples[c];
    std::sort(s.ch[c].begin(), s.ch[c].end());
  }
  return s;
}

std::vector<double> resample_sorted(std::span<const double> sorted, std::size_t m) {
  if (sorted.empty()) throw Error(Errc::kEmptySample, "cannot resample an empty sample");
  if (sorted.size() == m) return {sorted.begin(), sorted.end()};
  std::vector<double> out(m);
  const std::size_t n = sorted.size();
  for (std::size_t k = 0; k < m; ++k) {
    const double pos = m == 1 ? 0.5 * static_cast<double>(n - 1)
                              : static_cast<double>(k) * static_cast<double>(n - 1) /
                                    static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    out[k] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return out;
}

namespace {

double mean_abs_diff(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::kEmptySample, "W1 of an empty sample");
  if (a.size() == b.size()) return mean_abs_diff(a, b);
  const std::size_t m = std::max(a.size(), b.size());
  const auto ra = resample_sorted(a, m);
  const auto rb = resample_sorted(b, m);
  return mean_abs_diff(ra, rb);
}

MixtureObjective::MixtureObjective(std::span<const ChannelSamples> banks,
                                   std::uint64_t perm_seed) {
  if (banks.empty()) return;
  n_ = banks[0].size();
  if (n_ == 0) throw Error(Errc::kEmptySample, "empty reference bank");
  permuted_.reserve(banks.size());
  for (std::size_t i = 0; i < banks.size(); ++i) {
    ChannelArray shuffled;
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (banks[i].ch[c].size() != n_)
        throw Error(Errc::kDimError, "reference banks differ in length");
      shuffled[c] = banks[i].ch[c];
      Rng rng(mix_seed(mix_seed(perm_seed, i), c));
      std::shuffle(shuffled[c].begin(), shuffled[c].end(), rng);
    }
    permuted_.push_back(std::move(shuffled));
  }
  const std::size_t r = permuted_.size();
  for (std::size_t c = 0; c < kChannels; ++c) {
    interleaved_[c].resize(n_ * r);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = 0; i < r; ++i) interleaved_[c][k * r + i] = permuted_[i][c][k];
  }
  scratch_.resize(n_);
  for (auto& o : order_) {
    o.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) o[k] = static_cast<std::uint32_t>(k);
  }
}

void MixtureObjective::check_weights(std::span<const double> w) const {
  if (w.size() != permuted_.size())
    throw Error(Errc::kDimError, "weight vector has " + std::to_string(w.size()) +
                                     " entries for " + std::to_string(permuted_.size()) +
                                     " references");
}

ChannelSamples MixtureObjective::superpose(std::span<const double> w) const {
  check_weights(w);
  ChannelSamples out;
  for (std::size_t c = 0; c < kChannels; ++c) {
    auto& s = out.ch[c];
    s.assign(n_, 0.0);
    const std::size_t r = permuted_.size();
    for (std::size_t k = 0; k < n_; ++k) {
      const double* row = &interleaved_[c][k * r];
      double v = 0.0;
      for (std::size_t i = 0; i < r; ++i) v += w[i] * row[i];
      s[k] = v;
    }
    std::sort(s.begin(), s.end());
  }
  return out;
}

ChannelSamples MixtureObjective::prepare(const ChannelSamples& live) const {
  ChannelSamples out;
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (live.ch[c].empty()) throw Error(Errc::kEmptySample, "live channel is empty");
    out.ch[c] = resample_sorted(live.ch[c], n_);
  }
  return out;
}

double MixtureObjective::distance_prepared(const ChannelSamples& live,
                                           std::span<const double> w) const {
  check_weights(w);
  const std::size_t r = permuted_.size();
  double total = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    // Successive evaluations are at nearby weights, so the previous sort
    // order is almost right; insertion sort from it.
    auto& order = order_[c];
    for (std::size_t k = 0; k < n_; ++k) {
      const double* row = &interleaved_[c][order[k] * r];
      double v = 0.0;
      for (std::size_t i = 0; i < r; ++i) v += w[i] * row[i];
      scratch_[k] = v;
    }
    for (std::size_t k = 1; k < n_; ++k) {
      const double v = scratch_[k];
      const auto idx = order[k];
      std::size_t m = k;
      while (m > 0 && scratch_[m - 1] > v) {
        scratch_[m] = scratch_[m - 1];
        order[m] = order[m - 1];
        --m;
      }
      scratch_[m] = v;
      order[m] = idx;
    }
    total += mean_abs_diff(live.ch[c], scratch_);
  }
  return total / static_cast<double>(kChannels);
}

double MixtureObjective::distance(const ChannelSamples& live, std::span<const double> w) const {
  if (live.size() == n_) return distance_prepared(live, w);
  return distance_prepared(prepare(live), w);
}

ChannelSamples superpose(std::span<const ChannelSamples> banks, std::span<const double> w,
                         std::uint64_t perm_seed) {
  if (banks.size() != w.size())
    throw Error(Errc::kDimError, "weights and banks differ in count");
  if (banks.empty()) throw Error(Errc::kDimError, "no banks to superpose");
  return MixtureObjective(banks, perm_seed).superpose(w);
}

double distance(const ChannelSamples& live, std::span<const ChannelSamples> banks,
                std::span<const double> w, std::uint64_t perm_seed) {
  if (banks.size() != w.size())
    throw Error(Errc::kDimError, "weights and banks differ in count");
  if (banks.empty()) throw Error(Errc::kDimError, "no banks");
  return MixtureObjective(banks, perm_seed).distance(live, w);
}

WeightVector fd_gradient(const MixtureObjective& objective, const ChannelSamples& prepared_live,
                         std::span<const double> w, double h) {
  if (!(h > 0.0)) throw Error(Errc::kConfigError, "finite-difference step must be > 0");
  WeightVector probe(w.begin(), w.end());
  WeightVector g(w.size(), 0.0);
  std::optional<double> centre;
  auto f_centre = [&] {
    if (!centre) centre = objective.distance_prepared(prepared_live, w);
    return *centre;
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = w[i];
    if (wi - h < 0.0) {
      probe[i] = wi + h;
      g[i] = (objective.distance_prepared(prepared_live, probe) - f_centre()) / h;
    } else if (wi + h > 1.0) {
      probe[i] = wi - h;
      g[i] = (f_centre() - objective.distance_prepared(prepared_live, probe)) / h;
    } else {
      probe[i] = wi + h;
      const double up = objective.distance_prepared(prepared_live, probe);
      probe[i] = wi - h;
      const double down = objective.distance_prepared(prepared_live, probe);
      g[i] = (up - down) / (2.0 * h);
    }
    probe[i] = wi;
  }
  return g;
}

WeightVector fd_gradient(const ChannelSamples& live, std::span<const ChannelSamples> banks,
                         std::span<const double> w, double h, std::uint64_t perm_seed) {
  if (banks.size() != w.size())
    throw Error(Errc::kDimError, "weights and banks differ in count");
  MixtureObjective objective(banks, perm_seed);
  return fd_gradient(objective, objective.prepare(live), w, h);
}

}  // namespace myoloop
