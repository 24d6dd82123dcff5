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

// Quasi-static simulated hand: rate-limited motors, finger extension-spring
// preload and a compliant virtual object.

#include <array>

#include "myoloop/types.hpp"

namespace myoloop {

struct HandState {
  MotorPose pos{};
  std::array<double, kMotors> torque{};
  std::array<bool, kFingers> contact{};
  double t_ms = 0.0;
};

struct VirtualObject {
  std::array<double, kFingers> closure{1.0, 1.0, 1.0, 1.0, 1.0};  // contact fraction per finger
  double stiffness = 0.0;  // torque per unit over-closure
  bool present = false;

  static VirtualObject uniform(double closure, double stiffness);
};

struct PlantConfig {
  double rate = 1.0;        // full range per second
  double tau_spring = 0.1;  // spring preload torque per finger
  double dt_ms = 10.0;

  double max_step() const noexcept { return rate * dt_ms / 1000.0; }
};

void validate(const PlantConfig& cfg);
void validate(const VirtualObject& obj);

HandState plant_step(const MotorPose& target, const VirtualObject& obj, const HandState& state,
                     const PlantConfig& cfg);

/// Torque transmitted beyond the spring preload, per finger.
std::array<double, kFingers> grasp_force(const HandState& state, const PlantConfig& cfg);

}  // namespace myoloop
