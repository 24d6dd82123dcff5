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

#include "myoloop/haptics.hpp"

#include <algorithm>
#include <cmath>

#include "myoloop/error.hpp"

namespace myoloop {

double max_vibration_sigma() { return 1.0 / std::sqrt(2.0 * std::log(100.0)); }

std::array<double, kModules> vibration_profile(double wrist_pos, double sigma) {
  if (!(sigma > 0.0) || sigma > max_vibration_sigma())
    throw Error(Errc::kConfigError, "vibration sigma must be in (0, " +
                                        std::to_string(max_vibration_sigma()) + "]");
  const double mu = static_cast<double>(kModules - 1) * std::clamp(wrist_pos, 0.0, 1.0);
  std::array<double, kModules> out{};
  for (std::size_t m = 0; m < kModules; ++m) {
    const double d = static_cast<double>(m) - mu;
    out[m] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return out;
}

FeedbackFrame render(const HandState& state, const PlantConfig& cfg) {
  FeedbackFrame frame;
  frame.t_ms = state.t_ms;
  const double span = 1.0 - cfg.tau_spring;
  for (std::size_t m = 0; m < kModules; ++m) {
    frame.tangential[m] = std::clamp(state.pos[m], 0.0, 1.0);
    frame.normal[m] = std::clamp((state.torque[m] - cfg.tau_spring) / span, 0.0, 1.0);
  }
  frame.vibration = vibration_profile(state.pos[kWrist]);
  return frame;
}

}  // namespace myoloop
