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

#include "myoloop/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "myoloop/error.hpp"

namespace myoloop {

double channel_angle(std::size_t c) {
  return 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(kChannels);
}

MusclePattern default_pattern() {
  // Flexion (I), abduction (II) and extension (III) sites around the ring.
  constexpr std::array<double, 3> centres{1.0, 3.5, 6.0};
  constexpr double width = 1.0;
  MusclePattern pattern;
  for (double centre : centres) {
    std::array<double, kChannels> row{};
    for (std::size_t c = 0; c < kChannels; ++c) {
      double d = std::abs(static_cast<double>(c) - centre);
      d = std::min(d, static_cast<double>(kChannels) - d);
      double g = std::exp(-d * d / (2.0 * width * width));
      row[c] = g < 0.01 ? 0.0 : g;
    }
    pattern.gains.push_back(row);
  }
  return pattern;
}

double cosine_similarity(const std::array<double, kChannels>& a,
                         const std::array<double, kChannels>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    ab += a[c] * b[c];
    aa += a[c] * a[c];
    bb += b[c] * b[c];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

void validate(const MusclePattern& pattern) {
  if (!(pattern.base > 0.0) || !std::isfinite(pattern.base))
    throw Error(Errc::kConfigError, "pattern base must be > 0");
  if (pattern.gains.empty()) throw Error(Errc::kConfigError, "pattern has no actions");
  for (std::size_t i = 0; i < pattern.gains.size(); ++i) {
    const auto& row = pattern.gains[i];
    bool any = false;
    for (double g : row) {
      if (!(g >= 0.0) || !std::isfinite(g))
        throw Error(Errc::kConfigError, "pattern gains must be finite and >= 0");
      any = any || g > 0.0;
    }
    if (!any) throw Error(Errc::kConfigError, "pattern row " + std::to_string(i) + " is all zero");
    for (std::size_t j = 0; j < i; ++j) {
      if (cosine_similarity(row, pattern.gains[j]) >= 0.95)
        throw Error(Errc::kConfigError, "pattern rows " + std::to_string(j) + " and " +
                                            std::to_string(i) + " are not distinguishable");
    }
  }
}

double KdeModel::density(std::size_t c, double x) const {
  const auto& s = support.at(c);
  if (s.empty()) return 0.0;
  const double h = bandwidth[c];
  const double norm = 1.0 / (static_cast<double>(s.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  double acc = 0.0;
  for (double xi : s) {
    const double u = (x - xi) / h;
    acc += std::exp(-0.5 * u * u);
  }
  return acc * norm;
}

EmgWindow rectify(std::span<const std::vector<double>> raw, double t_ms) {
  if (raw.size() != kChannels)
    throw Error(Errc::kDimError, "expected 8 channels, got " + std::to_string(raw.size()));
  EmgWindow w;
  w.t_ms = t_ms;
  const std::size_t n = raw[0].size();
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (raw[c].size() != n) throw Error(Errc::kDimError, "ragged channels");
    auto& out = w.samples[c];
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(raw[c][k]))
        throw Error(Errc::kInvalidSignal, "non-finite sample on channel " + std::to_string(c));
      out[k] = std::abs(raw[c][k]);
    }
  }
  return w;
}

EmgWindow synth_window(std::span<const double> activation, const MusclePattern& pattern,
                       std::size_t n, Rng& rng, double t_ms) {
  if (activation.size() != pattern.actions())
    throw Error(Errc::kDimError, "activation has " + std::to_string(activation.size()) +
                                     " entries, pattern has " +
                                     std::to_string(pattern.actions()) + " actions");
  std::array<double, kChannels> scale;
  scale.fill(pattern.base);
  for (std::size_t i = 0; i < activation.size(); ++i)
    for (std::size_t c = 0; c < kChannels; ++c) scale[c] += activation[i] * pattern.gains[i][c];

  EmgWindow w;
  w.t_ms = t_ms;
  std::normal_distribution<double> normal;
  for (std::size_t c = 0; c < kChannels; ++c) {
    auto& out = w.samples[c];
    out.resize(n);
    for (auto& x : out) x = std::abs(normal(rng)) * scale[c];
  }
  return w;
}

namespace {

double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 2) return kBandwidthFloor;
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double h = 0.9 * std::min(sd, iqr / 1.34) * std::pow(n, -0.2);
  return std::max(h, kBandwidthFloor);
}

KdeModel fit_kde(const EmgWindow& window) {
  if (window.size() < kMinWindowSamples)
    throw Error(Errc::kTooFewSamples, "KDE needs at least 8 samples per channel, got " +
                                          std::to_string(window.size()));
  KdeModel kde;
  for (std::size_t c = 0; c < kChannels; ++c) {
    kde.support[c] = window.samples[c];
    kde.bandwidth[c] = silverman_bandwidth(window.samples[c]);
  }
  return kde;
}

EmgWindow pool(std::span<const EmgWindow> windows) {
  EmgWindow pooled;
  if (windows.empty()) return pooled;
  pooled.t_ms = windows.front().t_ms;
  for (const auto& w : windows)
    for (std::size_t c = 0; c < kChannels; ++c)
      pooled.samples[c].insert(pooled.samples[c].end(), w.samples[c].begin(), w.samples[c].end());
  return pooled;
}

ReferenceActivity record_reference(std::span<const EmgWindow> windows, const ReferenceSpec& spec,
                                   Rng& rng) {
  if (windows.size() < 3)
    throw Error(Errc::kInsufficientCalibration,
                "reference '" + spec.id + "' needs >= 3 windows, got " +
                    std::to_string(windows.size()));
  if (spec.bank_size == 0) throw Error(Errc::kConfigError, "bank size must be > 0");
  if (spec.dof == Dof::kRest) {
    if (spec.antagonist_group)
      throw Error(Errc::kConfigError, "rest reference cannot have an antagonist group");
    for (double p : spec.target_pose)
      if (p != 0.0) throw Error(Errc::kConfigError, "rest reference must command the open pose");
  }

  ReferenceActivity ref;
  ref.id = spec.id;
  ref.dof = spec.dof;
  ref.target_pose = spec.target_pose;
  ref.antagonist_group = spec.antagonist_group;
  ref.kde = fit_kde(pool(windows));

  std::normal_distribution<double> normal;
  for (std::size_t c = 0; c < kChannels; ++c) {
    const auto& support = ref.kde.support[c];
    std::uniform_int_distribution<std::size_t> pick(0, support.size() - 1);
    auto& bank = ref.bank.ch[c];
    bank.resize(spec.bank_size);
    for (auto& x : bank) {
      const double centre = support[pick(rng)];
      // Kernel draws are truncated at 3 bandwidths.
      double z = normal(rng);
      while (std::abs(z) > 3.0) z = normal(rng);
      x = std::max(0.0, centre + ref.kde.bandwidth[c] * z);
    }
    std::sort(bank.begin(), bank.end());
  }
  return ref;
}

}  // namespace myoloop
