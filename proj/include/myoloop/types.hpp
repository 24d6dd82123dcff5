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

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace myoloop {

inline constexpr std::size_t kChannels = 8;
inline constexpr std::size_t kMotors = 6;
inline constexpr std::size_t kFingers = 5;

/// Motor order of the simulated hand. Fingers come first so that finger
/// index == feedback module index.
enum Motor : std::size_t { kThumb = 0, kIndex, kMiddle, kRing, kPinky, kWrist };

/// Normalized motor positions in [0,1]; 0 is open hand / neutral wrist.
using MotorPose = std::array<double, kMotors>;

/// Per-channel sample arrays (8 electrode sites).
using ChannelArray = std::array<std::vector<double>, kChannels>;

/// Sorted nonnegative intensities per channel.
struct ChannelSamples {
  ChannelArray ch;

  std::size_t size() const noexcept { return ch[0].size(); }
};

/// Controllable actions. Rest only exists for the discrete classifier.
enum class Dof { kI, kII, kIII, kRest };

std::string_view to_string(Dof dof) noexcept;
Dof dof_from_string(std::string_view s);

/// Motors scored for each DOF: all fingers for I, the wrist for II and the
/// tripod (thumb, index, middle) for III.
std::vector<std::size_t> dof_motors(Dof dof);

/// Full-activation pose of a reference action.
MotorPose dof_pose(Dof dof);

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a parent seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

}  // namespace myoloop
