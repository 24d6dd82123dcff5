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

// Position and force matching tasks driven by simulated operators, their
// error metrics, and the multi-arm study runner.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "myoloop/control.hpp"
#include "myoloop/haptics.hpp"
#include "myoloop/plant.hpp"
#include "myoloop/session_config.hpp"
#include "myoloop/stats.hpp"

namespace myoloop {

enum class TaskKind { kPosition, kForce };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind task_kind_from_string(std::string_view s);

struct TaskSpec {
  TaskKind kind = TaskKind::kPosition;
  std::vector<Dof> dofs;  // one or two; I and III never together
  std::size_t trials = 10;
  double duration_s = 5.0;
  bool training = false;  // user sees the true motor state
};

void validate(const TaskSpec& spec);

/// One value per targeted DOF, in TaskSpec::dofs order.
using Target = std::vector<double>;

inline constexpr double kTargetLow = 0.1;
inline constexpr double kTargetHigh = 0.9;

std::vector<Target> gen_targets(const TaskSpec& spec, Rng& rng);

enum class FeedbackLoop { kClosed, kOpen };

struct UserModel {
  FeedbackLoop kind = FeedbackLoop::kClosed;
  double gain = 0.5;
  double resolution = 0.05;  // percept quantization step
  double noise = 0.02;       // activation noise sd per control step
  double drift = 0.05;       // open-loop bias accumulated over one trial
};

void validate(const UserModel& user);

struct UserState {
  ActivationVector activation = ActivationVector(3, 0.0);
  std::array<double, 3> efference{};  // internal forward-model estimate per action
  double drift = 0.0;
};

/// Index of a DOF's reference action in the activation vector.
std::size_t action_index(Dof dof);

double quantize(double x, double step);

/// Wrist position recovered from the vibration strip by inverting the
/// Gaussian profile between the two strongest modules.
double estimate_wrist(const std::array<double, kModules>& vibration,
                      double sigma = kVibrationSigma);

/// Armband-derived estimate of each targeted quantity (tangential for
/// position, normal for force, vibration for the wrist), quantized.
std::vector<double> perceive_feedback(const FeedbackFrame& frame, const TaskSpec& spec,
                                      const PlantConfig& plant, double resolution);

/// The visual readout available during training: true mean position or
/// force over each DOF's motors.
std::vector<double> perceive_state(const HandState& hand, const TaskSpec& spec,
                                   const PlantConfig& plant);

/// Forward-model prediction plus accumulated drift.
std::vector<double> perceive_efference(const UserState& state, const TaskSpec& spec,
                                       const VirtualObject& obj, const PlantConfig& plant);

/// a <- clamp(a + g * (target - percept) + noise) for targeted DOFs; the
/// other actions relax to zero.
ActivationVector user_step(const UserModel& user, const TaskSpec& spec, const Target& target,
                           std::span<const double> percept, UserState& state, Rng& rng);

/// One control step's open-loop bias increment; `steps` increments sum to
/// `user.drift` in expectation.
double drift_increment(const UserModel& user, std::size_t steps, Rng& rng);

struct TraceStep {
  double t_ms = 0.0;
  ActivationVector activation;
  WeightVector weights;
  double distance = 0.0;
  MotorPose command{};
  HandState hand;
  FeedbackFrame feedback;
};

struct TrialTrace {
  TaskSpec spec;
  Target target;
  ControlMode mode = ControlMode::kContinuous;
  FeedbackLoop loop = FeedbackLoop::kClosed;
  std::vector<TraceStep> steps;
  std::vector<double> mae_per_dof;
  double mae = 0.0;  // mean of mae_per_dof
};

inline constexpr double kScoreWindowS = 0.5;

/// Mean over the DOF's motors of |final-window mean - target| in percent.
double mae(const TrialTrace& trace, Dof dof, double target, const SessionConfig& session);

/// Object grasped during force tasks.
VirtualObject default_force_object();

struct TrialContext {
  const SessionConfig& session;
  const ReferenceSet& refs;
  VirtualObject object;  // only used for force tasks
};

TrialTrace run_trial(const TaskSpec& spec, const Target& target, const TrialContext& ctx,
                     const UserModel& user, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Study

struct Arm {
  std::string name;
  FeedbackLoop loop = FeedbackLoop::kClosed;
  ControlMode mode = ControlMode::kContinuous;
};

/// OLDC, CLDC, OLCC or CLCC.
Arm parse_arm(std::string_view name);

struct StudyConfig {
  std::vector<std::string> arms{"OLDC", "CLDC", "OLCC", "CLCC"};
  std::size_t subjects = 10;
  std::uint64_t seed = 0;
  std::size_t training_trials = 10;
  std::size_t testing_trials = 10;
  double trial_duration_s = 5.0;
  std::vector<std::vector<Dof>> position_rounds{
      {Dof::kI}, {Dof::kII}, {Dof::kIII}, {Dof::kI, Dof::kII}, {Dof::kII, Dof::kIII}};
  std::vector<std::vector<Dof>> force_rounds{{Dof::kI}, {Dof::kIII}};
  double bonferroni = 1.0;
  UserModel user;
  VirtualObject force_object = default_force_object();
  SessionConfig session;
};

void validate(const StudyConfig& cfg);

/// Task categories reported per arm.
inline constexpr std::array<std::string_view, 3> kCategories{"position_single", "position_dual",
                                                             "force"};

struct TrialScore {
  std::size_t subject = 0;
  std::size_t round = 0;
  std::size_t trial = 0;
  std::string category;
  TaskKind kind = TaskKind::kPosition;
  std::vector<Dof> dofs;
  bool training = false;
  Target target;
  double mae = 0.0;
};

struct ArmResult {
  Arm arm;
  std::vector<TrialScore> trials;
  /// Per-subject mean testing MAE, keyed by category.
  std::map<std::string, std::vector<double>> subject_testing;
  std::map<std::string, std::vector<double>> subject_training;
};

struct Comparison {
  std::string a;
  std::string b;
  std::string category;
  MannWhitneyResult test;
  double p_corrected = 1.0;
  double median_a = 0.0;
  double median_b = 0.0;
};

struct StudyReport {
  StudyConfig config;
  std::vector<ArmResult> arms;
  std::vector<Comparison> comparisons;  // continuous arms only
};

using TraceSink = std::function<void(const Arm&, const TrialScore&, const TrialTrace&)>;

StudyReport run_study(const StudyConfig& cfg, const TraceSink& sink = {});

}  // namespace myoloop
