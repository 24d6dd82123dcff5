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

#include <cstdint>

#include "myoloop/control.hpp"
#include "myoloop/plant.hpp"
#include "myoloop/signal.hpp"

namespace myoloop {

/// Rates and component configs of one control session.
struct SessionConfig {
  double control_rate = 20.0;  // Hz
  double emg_rate = 200.0;     // Hz
  double window_ms = 200.0;
  ControllerConfig controller;
  PlantConfig plant;
  MusclePattern pattern = default_pattern();
  std::uint64_t seed = 0;
  std::size_t calibration_windows = 10;  // per reference
  std::size_t bank_size = kDefaultBankSize;

  std::size_t window_samples() const noexcept;
  double control_period_ms() const noexcept { return 1000.0 / control_rate; }
  /// Plant sub-steps per control step.
  std::size_t plant_substeps() const noexcept;
};

void validate(const SessionConfig& cfg);

/// Synthesizes REST/I/II/III references from the session's muscle pattern
/// and calibrates the discrete threshold on held-out windows.
ReferenceSet calibrate_references(const SessionConfig& cfg, std::uint64_t seed);

}  // namespace myoloop
