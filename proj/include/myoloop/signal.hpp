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

// Rectified surface EMG: windows, the superposition generator, per-channel
// kernel density estimates and reference calibration.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "myoloop/types.hpp"

namespace myoloop {

/// One control-step window of rectified EMG, 8 channels x N samples.
struct EmgWindow {
  ChannelArray samples;
  double t_ms = 0.0;

  std::size_t size() const noexcept { return samples[0].size(); }
};

/// Circumferential electrode position of channel `c`, 2*pi*c/8.
double channel_angle(std::size_t c);

/// Noise floor used when no pattern is given.
inline constexpr double kDefaultBase = 0.05;

/// Spatial gains of each action over the electrode ring.
struct MusclePattern {
  std::vector<std::array<double, kChannels>> gains;  // one row per action
  double base = kDefaultBase;

  std::size_t actions() const noexcept { return gains.size(); }
};

/// Three-action pattern (I, II, III) with Gaussian bumps around the ring.
MusclePattern default_pattern();

/// Throws ConfigError when a row has no positive gain, base <= 0, or two
/// actions are near-collinear (cosine >= 0.95).
void validate(const MusclePattern& pattern);

double cosine_similarity(const std::array<double, kChannels>& a,
                         const std::array<double, kChannels>& b);

/// Muscle effort per non-rest action, each in [0,1].
using ActivationVector = std::vector<double>;

/// Per-channel Gaussian KDE over intensities.
struct KdeModel {
  ChannelArray support;
  std::array<double, kChannels> bandwidth{};

  double density(std::size_t c, double x) const;
};

inline constexpr double kBandwidthFloor = 1e-3;
inline constexpr std::size_t kMinWindowSamples = 8;
inline constexpr std::size_t kDefaultBankSize = 64;

/// Pre-recorded reference activity: bank of KDE draws per channel plus the
/// pose it commands.
struct ReferenceActivity {
  std::string id;
  Dof dof = Dof::kRest;
  MotorPose target_pose{};
  std::optional<int> antagonist_group;
  KdeModel kde;       // support is empty for references loaded from JSON
  ChannelSamples bank;  // sorted ascending, equal length per channel

  std::size_t bank_size() const noexcept { return bank.size(); }
};

/// Absolute value of a signed C x N recording. Requires C == 8 and equal
/// channel lengths.
EmgWindow rectify(std::span<const std::vector<double>> raw, double t_ms = 0.0);

/// Draws N samples per channel as |z| * (base + sum_i a_i * gains[i][c]).
EmgWindow synth_window(std::span<const double> activation, const MusclePattern& pattern,
                       std::size_t n, Rng& rng, double t_ms = 0.0);

/// Silverman-rule bandwidth with the 1e-3 floor.
double silverman_bandwidth(std::span<const double> samples);

KdeModel fit_kde(const EmgWindow& window);

struct ReferenceSpec {
  std::string id;
  Dof dof = Dof::kRest;
  MotorPose target_pose{};
  std::optional<int> antagonist_group;
  std::size_t bank_size = kDefaultBankSize;
};

/// Pools windows, fits a KDE and draws a smoothed-bootstrap bank per channel.
ReferenceActivity record_reference(std::span<const EmgWindow> windows, const ReferenceSpec& spec,
                                   Rng& rng);

/// Concatenates windows channel by channel.
EmgWindow pool(std::span<const EmgWindow> windows);

}  // namespace myoloop
