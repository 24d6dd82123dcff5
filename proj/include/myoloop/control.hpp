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

// Discrete (nearest reference under a threshold) and continuous
// (superposition fitting + exponential smoothing) controllers.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "myoloop/signal.hpp"
#include "myoloop/transport.hpp"

namespace myoloop {

enum class ControlMode { kDiscrete, kContinuous };

std::string_view to_string(ControlMode mode) noexcept;
ControlMode control_mode_from_string(std::string_view s);

struct ControllerConfig {
  double alpha = 0.3;   // smoothing factor
  int steps = 20;       // descent steps per control step
  double lr = 0.5;
  double h = 1e-2;      // finite-difference step
  std::optional<double> threshold;  // discrete-mode distance threshold
  ControlMode mode = ControlMode::kContinuous;
  bool feedback_enabled = true;
};

void validate(const ControllerConfig& cfg);

/// Calibrated references. `mixture` indexes the non-rest references in the
/// order their weights appear in a WeightVector.
class ReferenceSet {
 public:
  ReferenceSet() = default;
  explicit ReferenceSet(std::vector<ReferenceActivity> refs, std::optional<double> threshold = {});

  const std::vector<ReferenceActivity>& refs() const noexcept { return refs_; }
  const std::vector<std::size_t>& mixture() const noexcept { return mixture_; }
  std::span<const ChannelSamples> mixture_banks() const noexcept { return mixture_banks_; }
  std::optional<double> threshold() const noexcept { return threshold_; }
  void set_threshold(double threshold);
  /// Per mixture reference: fitted weight at rest (maps to 0) and at full
  /// activation (maps to 1).
  const std::vector<double>& weight_floor() const noexcept { return weight_floor_; }
  const std::vector<double>& weight_ceiling() const noexcept { return weight_ceiling_; }
  void set_weight_range(std::vector<double> floor, std::vector<double> ceiling);

  std::size_t size() const noexcept { return refs_.size(); }
  bool empty() const noexcept { return refs_.empty(); }
  /// Number of weights (non-rest references).
  std::size_t rank() const noexcept { return mixture_.size(); }
  const ReferenceActivity& mixture_ref(std::size_t i) const { return refs_[mixture_[i]]; }

 private:
  std::vector<ReferenceActivity> refs_;
  std::vector<std::size_t> mixture_;
  std::vector<ChannelSamples> mixture_banks_;
  std::optional<double> threshold_;
  std::vector<double> weight_floor_;
  std::vector<double> weight_ceiling_;
};

struct ControllerState {
  MotorPose prev_target{};
  WeightVector prev_weights;
  std::uint64_t step_index = 0;
  std::uint64_t perm_seed = 0;  // bank permutation used by every control step

  // Telemetry of the last control step.
  double last_distance = 0.0;
  WeightVector last_weights;  // after antagonist resolution
  std::optional<std::size_t> last_match;
};

ControllerState make_state(const ReferenceSet& refs, std::uint64_t perm_seed = 0);

/// Index of the closest reference if its distance is below `threshold`.
/// Ties go to the lowest index.
std::optional<std::size_t> classify_discrete(const ChannelSamples& live, const ReferenceSet& refs,
                                             double threshold);

/// Distance of `live` to each reference bank on its own.
std::vector<double> reference_distances(const ChannelSamples& live, const ReferenceSet& refs);

/// mean + 2 sd of distances from each reference's held-out windows to its own
/// bank. `held_out[i]` belongs to `refs.refs()[i]`.
double calibrate_threshold(const ReferenceSet& refs,
                           std::span<const std::vector<EmgWindow>> held_out);

/// Projected fixed-step descent on the superposition loss, warm-started from
/// state.prev_weights.
WeightVector infer_weights(const ChannelSamples& live, const ReferenceSet& refs,
                           const ControllerState& state, const ControllerConfig& cfg);

/// Keeps only the largest weight of each antagonist group.
struct WeightRange {
  std::vector<double> floor;
  std::vector<double> ceiling;
};

/// Floor: mean + 2 sd of weights fitted to rest windows. Ceiling: mean weight
/// fitted to windows of each reference's own full activation.
/// `full_windows[i]` belongs to mixture reference i.
WeightRange calibrate_weight_range(const ReferenceSet& refs, std::span<const EmgWindow> rest_windows,
                                   std::span<const std::vector<EmgWindow>> full_windows,
                                   const ControllerConfig& cfg, std::uint64_t perm_seed);

/// (w - floor) / (ceiling - floor), clamped to [0, 1].
WeightVector apply_weight_range(std::span<const double> w, const ReferenceSet& refs);

WeightVector resolve_antagonists(std::span<const double> w, const ReferenceSet& refs);

/// Clamped blend sum_i w_i * P_i.
MotorPose blend_pose(std::span<const double> w, const ReferenceSet& refs);

/// P_k = alpha * blend + (1 - alpha) * P_{k-1}; updates state.prev_target.
MotorPose smooth_target(std::span<const double> w_resolved, const ReferenceSet& refs,
                        ControllerState& state, const ControllerConfig& cfg);

/// One full control step from a rectified window to a motor command.
MotorPose control_step(const EmgWindow& window, const ReferenceSet& refs, ControllerState& state,
                       const ControllerConfig& cfg);

}  // namespace myoloop
