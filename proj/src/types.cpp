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

#include "myoloop/types.hpp"

#include <string>

#include "myoloop/error.hpp"

namespace myoloop {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidSignal: return "InvalidSignal";
    case Errc::kTooFewSamples: return "TooFewSamples";
    case Errc::kInsufficientCalibration: return "InsufficientCalibration";
    case Errc::kEmptySample: return "EmptySample";
    case Errc::kDimError: return "DimError";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kNotCalibrated: return "NotCalibrated";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

std::string_view to_string(Dof dof) noexcept {
  switch (dof) {
    case Dof::kI: return "I";
    case Dof::kII: return "II";
    case Dof::kIII: return "III";
    case Dof::kRest: return "REST";
  }
  return "REST";
}

Dof dof_from_string(std::string_view s) {
  if (s == "I") return Dof::kI;
  if (s == "II") return Dof::kII;
  if (s == "III") return Dof::kIII;
  if (s == "REST" || s == "rest") return Dof::kRest;
  throw Error(Errc::kConfigError, "unknown DOF '" + std::string(s) + "'");
}

std::vector<std::size_t> dof_motors(Dof dof) {
  switch (dof) {
    case Dof::kI: return {kThumb, kIndex, kMiddle, kRing, kPinky};
    case Dof::kII: return {kWrist};
    case Dof::kIII: return {kThumb, kIndex, kMiddle};
    case Dof::kRest: return {};
  }
  return {};
}

MotorPose dof_pose(Dof dof) {
  MotorPose pose{};
  for (std::size_t m : dof_motors(dof)) pose[m] = 1.0;
  return pose;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace myoloop
