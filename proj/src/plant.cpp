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

#include "myoloop/plant.hpp"

#include <algorithm>
#include <cmath>

#include "myoloop/error.hpp"

namespace myoloop {

VirtualObject VirtualObject::uniform(double closure, double stiffness) {
  VirtualObject obj;
  obj.closure.fill(closure);
  obj.stiffness = stiffness;
  obj.present = true;
  return obj;
}

void validate(const PlantConfig& cfg) {
  if (!(cfg.rate > 0.0)) throw Error(Errc::kConfigError, "plant rate must be > 0");
  if (!(cfg.tau_spring >= 0.0 && cfg.tau_spring < 1.0))
    throw Error(Errc::kConfigError, "tau_spring must be in [0, 1)");
  if (!(cfg.dt_ms > 0.0)) throw Error(Errc::kConfigError, "dt_ms must be > 0");
}

void validate(const VirtualObject& obj) {
  for (double k : obj.closure)
    if (!(k > 0.0 && k <= 1.0)) throw Error(Errc::kConfigError, "closure must be in (0, 1]");
  if (!(obj.stiffness >= 0.0)) throw Error(Errc::kConfigError, "stiffness must be >= 0");
}

HandState plant_step(const MotorPose& target, const VirtualObject& obj, const HandState& state,
                     const PlantConfig& cfg) {
  const double max_step = cfg.max_step();
  HandState next = state;
  next.t_ms = state.t_ms + cfg.dt_ms;
  for (std::size_t m = 0; m < kMotors; ++m) {
    const double cmd = std::clamp(target[m], 0.0, 1.0);
    double pos = state.pos[m] + std::clamp(cmd - state.pos[m], -max_step, max_step);
    if (m < kFingers && obj.present) pos = std::min(pos, obj.closure[m]);
    next.pos[m] = pos;
  }
  for (std::size_t f = 0; f < kFingers; ++f) {
    const bool contact = obj.present && next.pos[f] >= obj.closure[f];
    next.contact[f] = contact;
    double torque = next.pos[f] > 0.0 ? cfg.tau_spring : 0.0;
    if (contact) torque += obj.stiffness * std::max(0.0, std::clamp(target[f], 0.0, 1.0) - obj.closure[f]);
    next.torque[f] = std::min(torque, 1.0);
  }
  next.torque[kWrist] = 0.0;
  return next;
}

std::array<double, kFingers> grasp_force(const HandState& state, const PlantConfig& cfg) {
  std::array<double, kFingers> force{};
  for (std::size_t f = 0; f < kFingers; ++f)
    force[f] = std::clamp(state.torque[f] - cfg.tau_spring, 0.0, 1.0);
  return force;
}

}  // namespace myoloop
