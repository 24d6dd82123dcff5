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

#include "myoloop/plant.hpp"

namespace myoloop {

inline constexpr std::size_t kModules = 5;

/// Actuator intensities of the 5-module armband, thumb on module 0.
struct FeedbackFrame {
  std::array<double, kModules> tangential{};
  std::array<double, kModules> normal{};
  std::array<double, kModules> vibration{};
  double t_ms = 0.0;

  bool operator==(const FeedbackFrame&) const = default;
};

inline constexpr double kVibrationSigma = 0.3;

/// Largest width for which a module at full intensity leaves its neighbours
/// below 1%: 1/sqrt(2 ln 100).
double max_vibration_sigma();

/// Gaussian sweep of the wrist position across the modules, centre 4*wrist_pos.
std::array<double, kModules> vibration_profile(double wrist_pos, double sigma = kVibrationSigma);

FeedbackFrame render(const HandState& state, const PlantConfig& cfg);

}  // namespace myoloop
