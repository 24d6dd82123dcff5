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

#include "myoloop/session_config.hpp"

#include <cmath>

#include "myoloop/error.hpp"

namespace myoloop {

std::size_t SessionConfig::window_samples() const noexcept {
  return static_cast<std::size_t>(std::lround(window_ms * emg_rate / 1000.0));
}

std::size_t SessionConfig::plant_substeps() const noexcept {
  const long n = std::lround(control_period_ms() / plant.dt_ms);
  return n < 1 ? 1 : static_cast<std::size_t>(n);
}

void validate(const SessionConfig& cfg) {
  if (!(cfg.control_rate > 0.0)) throw Error(Errc::kConfigError, "control_rate must be > 0");
  if (!(cfg.emg_rate > 0.0)) throw Error(Errc::kConfigError, "emg_rate must be > 0");
  if (cfg.control_rate > cfg.emg_rate)
    throw Error(Errc::kConfigError, "control_rate must not exceed emg_rate");
  if (cfg.window_samples() < kMinWindowSamples)
    throw Error(Errc::kConfigError, "window_ms * emg_rate / 1000 must be >= 8 samples");
  if (cfg.calibration_windows < 3)
    throw Error(Errc::kConfigError, "calibration_windows must be >= 3");
  if (cfg.bank_size == 0) throw Error(Errc::kConfigError, "bank_size must be > 0");
  validate(cfg.controller);
  validate(cfg.plant);
  validate(cfg.pattern);
  if (cfg.pattern.actions() != 3)
    throw Error(Errc::kConfigError, "pattern must define exactly 3 actions (DOF I, II, III)");
}

namespace {

constexpr std::size_t kRangeWindows = 20;

}  // namespace

ReferenceSet calibrate_references(const SessionConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  const std::size_t n = cfg.window_samples();
  const std::size_t held = std::max<std::size_t>(3, cfg.calibration_windows / 2);
  constexpr std::array<Dof, 4> dofs{Dof::kRest, Dof::kI, Dof::kII, Dof::kIII};

  std::vector<ReferenceActivity> refs;
  std::vector<std::vector<EmgWindow>> held_out;
  for (Dof dof : dofs) {
    ActivationVector a(3, 0.0);
    if (dof != Dof::kRest) a[static_cast<std::size_t>(dof)] = 1.0;
    std::vector<EmgWindow> windows;
    for (std::size_t k = 0; k < cfg.calibration_windows; ++k)
      windows.push_back(synth_window(a, cfg.pattern, n, rng));
    std::vector<EmgWindow> test;
    for (std::size_t k = 0; k < held; ++k) test.push_back(synth_window(a, cfg.pattern, n, rng));

    ReferenceSpec spec;
    spec.id = std::string(to_string(dof));
    spec.dof = dof;
    spec.target_pose = dof_pose(dof);
    // The two grasps share the finger motors and cannot run together.
    if (dof == Dof::kI || dof == Dof::kIII) spec.antagonist_group = 0;
    spec.bank_size = cfg.bank_size;
    refs.push_back(record_reference(windows, spec, rng));
    held_out.push_back(std::move(test));
  }
  ReferenceSet set(std::move(refs));
  set.set_threshold(calibrate_threshold(set, held_out));

  // Two-point weight calibration on fresh rest and full-activation windows.
  const ActivationVector zero(3, 0.0);
  std::vector<EmgWindow> rest;
  std::vector<std::vector<EmgWindow>> full(3);
  for (std::size_t k = 0; k < kRangeWindows; ++k) {
    rest.push_back(synth_window(zero, cfg.pattern, n, rng));
    for (std::size_t i = 0; i < 3; ++i) {
      ActivationVector a(3, 0.0);
      a[i] = 1.0;
      full[i].push_back(synth_window(a, cfg.pattern, n, rng));
    }
  }
  auto range = calibrate_weight_range(set, rest, full, cfg.controller, mix_seed(seed, 13));
  set.set_weight_range(std::move(range.floor), std::move(range.ceiling));
  return set;
}

}  // namespace myoloop
