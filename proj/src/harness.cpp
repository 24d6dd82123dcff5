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

#include "myoloop/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "myoloop/error.hpp"

namespace myoloop {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::kPosition ? "position" : "force";
}

TaskKind task_kind_from_string(std::string_view s) {
  if (s == "position") return TaskKind::kPosition;
  if (s == "force") return TaskKind::kForce;
  throw Error(Errc::kConfigError, "unknown task kind '" + std::string(s) + "'");
}

void validate(const TaskSpec& spec) {
  if (spec.dofs.empty() || spec.dofs.size() > 2)
    throw Error(Errc::kConfigError, "a task targets one or two DOFs");
  std::set<Dof> seen;
  for (Dof d : spec.dofs) {
    if (d == Dof::kRest) throw Error(Errc::kConfigError, "REST cannot be a task target");
    if (!seen.insert(d).second) throw Error(Errc::kConfigError, "duplicate DOF in task");
    if (spec.kind == TaskKind::kForce && d == Dof::kII)
      throw Error(Errc::kConfigError, "force tasks target the grasping DOFs (I, III)");
  }
  if (seen.contains(Dof::kI) && seen.contains(Dof::kIII))
    throw Error(Errc::kConfigError, "DOF I and III are antagonistic and cannot be combined");
  if (!(spec.duration_s > 0.0)) throw Error(Errc::kConfigError, "trial duration must be > 0");
}

std::vector<Target> gen_targets(const TaskSpec& spec, Rng& rng) {
  validate(spec);
  std::uniform_real_distribution<double> u(kTargetLow, kTargetHigh);
  std::vector<Target> out(spec.trials);
  for (auto& t : out) {
    t.resize(spec.dofs.size());
    for (auto& x : t) x = u(rng);
  }
  return out;
}

void validate(const UserModel& user) {
  if (!(user.gain >= 0.0)) throw Error(Errc::kConfigError, "user gain must be >= 0");
  if (!(user.resolution > 0.0 && user.resolution < 0.5))
    throw Error(Errc::kConfigError, "user resolution must be in (0, 0.5)");
  if (!(user.noise >= 0.0)) throw Error(Errc::kConfigError, "user noise must be >= 0");
  if (!std::isfinite(user.drift)) throw Error(Errc::kConfigError, "user drift must be finite");
}

std::size_t action_index(Dof dof) {
  if (dof == Dof::kRest) throw Error(Errc::kConfigError, "REST has no action");
  return static_cast<std::size_t>(dof);
}

double quantize(double x, double step) { return std::round(x / step) * step; }

double estimate_wrist(const std::array<double, kModules>& vibration, double sigma) {
  const auto top = static_cast<std::size_t>(
      std::max_element(vibration.begin(), vibration.end()) - vibration.begin());
  std::size_t lo = top;
  if (top == 0) {
    lo = 0;
  } else if (top == kModules - 1) {
    lo = top - 1;
  } else {
    lo = vibration[top - 1] > vibration[top + 1] ? top - 1 : top;
  }
  double mu = static_cast<double>(top);
  if (vibration[lo] > 0.0 && vibration[lo + 1] > 0.0)
    mu = static_cast<double>(lo) + 0.5 + sigma * sigma * std::log(vibration[lo + 1] / vibration[lo]);
  return std::clamp(mu / static_cast<double>(kModules - 1), 0.0, 1.0);
}

namespace {

template <typename Values>
double mean_over(const Values& values, const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (std::size_t i : idx) acc += values[i];
  return acc / static_cast<double>(idx.size());
}

}  // namespace

std::vector<double> perceive_feedback(const FeedbackFrame& frame, const TaskSpec& spec,
                                      const PlantConfig& plant, double resolution) {
  std::vector<double> out;
  for (Dof d : spec.dofs) {
    double x = 0.0;
    if (spec.kind == TaskKind::kPosition) {
      x = d == Dof::kII ? estimate_wrist(frame.vibration) : mean_over(frame.tangential, dof_motors(d));
    } else {
      x = mean_over(frame.normal, dof_motors(d)) * (1.0 - plant.tau_spring);
    }
    out.push_back(quantize(x, resolution));
  }
  return out;
}

std::vector<double> perceive_state(const HandState& hand, const TaskSpec& spec,
                                   const PlantConfig& plant) {
  std::vector<double> out;
  const auto force = grasp_force(hand, plant);
  for (Dof d : spec.dofs) {
    out.push_back(spec.kind == TaskKind::kPosition ? mean_over(hand.pos, dof_motors(d))
                                                   : mean_over(force, dof_motors(d)));
  }
  return out;
}

std::vector<double> perceive_efference(const UserState& state, const TaskSpec& spec,
                                       const VirtualObject& obj, const PlantConfig& plant) {
  std::vector<double> out;
  for (Dof d : spec.dofs) {
    const double e = state.efference[action_index(d)];
    double x = e;
    if (spec.kind == TaskKind::kForce) {
      double acc = 0.0;
      const auto fingers = dof_motors(d);
      for (std::size_t f : fingers) {
        const double torque =
            std::min(1.0, plant.tau_spring + obj.stiffness * std::max(0.0, e - obj.closure[f]));
        acc += torque - plant.tau_spring;
      }
      x = acc / static_cast<double>(fingers.size());
    }
    out.push_back(x + state.drift);
  }
  return out;
}

ActivationVector user_step(const UserModel& user, const TaskSpec& spec, const Target& target,
                           std::span<const double> percept, UserState& state, Rng& rng) {
  if (target.size() != spec.dofs.size() || percept.size() != spec.dofs.size())
    throw Error(Errc::kDimError, "target/percept size does not match the task");
  std::normal_distribution<double> noise(0.0, 1.0);
  ActivationVector next(3, 0.0);
  for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
    const std::size_t j = action_index(spec.dofs[k]);
    const double step = user.gain * (target[k] - percept[k]) + user.noise * noise(rng);
    next[j] = std::clamp(state.activation[j] + step, 0.0, 1.0);
  }
  state.activation = next;
  return next;
}

double drift_increment(const UserModel& user, std::size_t steps, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  return user.drift / static_cast<double>(std::max<std::size_t>(steps, 1)) * (1.0 + unit(rng));
}

VirtualObject default_force_object() { return VirtualObject::uniform(0.3, 1.5); }

double mae(const TrialTrace& trace, Dof dof, double target, const SessionConfig& session) {
  if (trace.steps.empty()) throw Error(Errc::kEmptySample, "empty trace");
  const auto window = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(kScoreWindowS * session.control_rate)), 1,
      trace.steps.size());
  const auto motors = dof_motors(dof);
  double total = 0.0;
  for (std::size_t m : motors) {
    double acc = 0.0;
    for (std::size_t k = trace.steps.size() - window; k < trace.steps.size(); ++k) {
      const auto& hand = trace.steps[k].hand;
      acc += trace.spec.kind == TaskKind::kPosition ? hand.pos[m]
                                                    : grasp_force(hand, session.plant)[m];
    }
    total += std::abs(acc / static_cast<double>(window) - target);
  }
  return 100.0 * total / static_cast<double>(motors.size());
}

TrialTrace run_trial(const TaskSpec& spec, const Target& target, const TrialContext& ctx,
                     const UserModel& user, std::uint64_t seed) {
  validate(spec);
  validate(user);
  const SessionConfig& session = ctx.session;
  const ControllerConfig& cfg = session.controller;
  if (ctx.refs.empty() || ctx.refs.rank() != 3)
    throw Error(Errc::kNotCalibrated, "trial needs calibrated I/II/III references");
  if (cfg.mode == ControlMode::kDiscrete && !cfg.threshold && !ctx.refs.threshold())
    throw Error(Errc::kNotCalibrated, "discrete control needs a calibrated threshold");
  if (target.size() != spec.dofs.size())
    throw Error(Errc::kDimError, "target does not match the task DOFs");

  Rng user_rng(mix_seed(seed, 2));
  Rng emg_rng(mix_seed(seed, 3));
  ControllerState ctrl = make_state(ctx.refs, mix_seed(seed, 1));
  UserState us;
  HandState hand;
  const VirtualObject obj = spec.kind == TaskKind::kForce ? ctx.object : VirtualObject{};
  FeedbackFrame frame = render(hand, session.plant);

  const auto steps = static_cast<std::size_t>(std::lround(spec.duration_s * session.control_rate));
  const std::size_t n = session.window_samples();
  const std::size_t substeps = session.plant_substeps();

  TrialTrace trace;
  trace.spec = spec;
  trace.target = target;
  trace.mode = cfg.mode;
  trace.loop = user.kind;
  trace.steps.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t_ms = static_cast<double>(k) * session.control_period_ms();
    std::vector<double> percept;
    if (spec.training) {
      percept = perceive_state(hand, spec, session.plant);
    } else if (user.kind == FeedbackLoop::kClosed) {
      percept = perceive_feedback(frame, spec, session.plant, user.resolution);
    } else {
      percept = perceive_efference(us, spec, obj, session.plant);
    }
    const ActivationVector a = user_step(user, spec, target, percept, us, user_rng);
    for (std::size_t j = 0; j < 3; ++j)
      us.efference[j] = cfg.alpha * a[j] + (1.0 - cfg.alpha) * us.efference[j];
    if (user.kind == FeedbackLoop::kOpen) us.drift += drift_increment(user, steps, user_rng);

    const EmgWindow window = synth_window(a, session.pattern, n, emg_rng, t_ms);
    const MotorPose command = control_step(window, ctx.refs, ctrl, cfg);
    for (std::size_t s = 0; s < substeps; ++s) hand = plant_step(command, obj, hand, session.plant);
    hand.t_ms = t_ms + session.control_period_ms();
    frame = render(hand, session.plant);

    TraceStep rec;
    rec.t_ms = hand.t_ms;
    rec.activation = a;
    rec.weights = ctrl.last_weights;
    rec.distance = ctrl.last_distance;
    rec.command = command;
    rec.hand = hand;
    rec.feedback = frame;
    trace.steps.push_back(std::move(rec));
  }

  double total = 0.0;
  for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
    trace.mae_per_dof.push_back(mae(trace, spec.dofs[k], target[k], session));
    total += trace.mae_per_dof.back();
  }
  trace.mae = total / static_cast<double>(spec.dofs.size());
  return trace;
}

Arm parse_arm(std::string_view name) {
  Arm arm;
  arm.name = std::string(name);
  if (name == "OLDC") {
    arm.loop = FeedbackLoop::kOpen;
    arm.mode = ControlMode::kDiscrete;
  } else if (name == "CLDC") {
    arm.loop = FeedbackLoop::kClosed;
    arm.mode = ControlMode::kDiscrete;
  } else if (name == "OLCC") {
    arm.loop = FeedbackLoop::kOpen;
    arm.mode = ControlMode::kContinuous;
  } else if (name == "CLCC") {
    arm.loop = FeedbackLoop::kClosed;
    arm.mode = ControlMode::kContinuous;
  } else {
    throw Error(Errc::kConfigError, "unknown arm '" + std::string(name) + "'");
  }
  return arm;
}

void validate(const StudyConfig& cfg) {
  if (cfg.arms.empty()) throw Error(Errc::kConfigError, "study has no arms");
  std::set<std::string> names;
  for (const auto& a : cfg.arms) {
    parse_arm(a);
    if (!names.insert(a).second) throw Error(Errc::kConfigError, "duplicate arm " + a);
  }
  if (cfg.subjects == 0) throw Error(Errc::kConfigError, "subjects must be > 0");
  if (cfg.testing_trials == 0) throw Error(Errc::kConfigError, "testing_trials must be > 0");
  if (!(cfg.bonferroni >= 1.0)) throw Error(Errc::kConfigError, "bonferroni must be >= 1");
  for (const auto& r : cfg.position_rounds)
    validate(TaskSpec{TaskKind::kPosition, r, 1, cfg.trial_duration_s, false});
  for (const auto& r : cfg.force_rounds)
    validate(TaskSpec{TaskKind::kForce, r, 1, cfg.trial_duration_s, false});
  validate(cfg.user);
  validate(cfg.force_object);
  validate(cfg.session);
}

namespace {

std::string category_of(TaskKind kind, std::size_t dofs) {
  if (kind == TaskKind::kForce) return "force";
  return dofs == 1 ? "position_single" : "position_dual";
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

StudyReport run_study(const StudyConfig& cfg, const TraceSink& sink) {
  validate(cfg);
  StudyReport report;
  report.config = cfg;

  struct Round {
    TaskKind kind;
    std::vector<Dof> dofs;
  };
  std::vector<Round> rounds;
  for (const auto& r : cfg.position_rounds) rounds.push_back({TaskKind::kPosition, r});
  for (const auto& r : cfg.force_rounds) rounds.push_back({TaskKind::kForce, r});

  for (const auto& arm_name : cfg.arms) {
    ArmResult result;
    result.arm = parse_arm(arm_name);
    SessionConfig session = cfg.session;
    session.controller.mode = result.arm.mode;
    session.controller.feedback_enabled = result.arm.loop == FeedbackLoop::kClosed;
    UserModel user = cfg.user;
    user.kind = result.arm.loop;

    for (std::size_t s = 0; s < cfg.subjects; ++s) {
      // Subject streams do not depend on the arm, so every arm sees the same
      // calibration, targets and EMG noise for subject s.
      const std::uint64_t subject_seed = mix_seed(cfg.seed, s);
      const ReferenceSet refs = calibrate_references(session, mix_seed(subject_seed, 11));
      const TrialContext ctx{session, refs, cfg.force_object};
      std::map<std::string, std::vector<double>> testing, training;

      for (std::size_t r = 0; r < rounds.size(); ++r) {
        const std::string category = category_of(rounds[r].kind, rounds[r].dofs.size());
        for (int phase = 0; phase < 2; ++phase) {
          const bool is_training = phase == 0;
          TaskSpec spec{rounds[r].kind, rounds[r].dofs,
                        is_training ? cfg.training_trials : cfg.testing_trials,
                        cfg.trial_duration_s, is_training};
          if (spec.trials == 0) continue;
          Rng target_rng(mix_seed(subject_seed, 100 + 2 * r + static_cast<std::size_t>(phase)));
          const auto targets = gen_targets(spec, target_rng);
          for (std::size_t t = 0; t < targets.size(); ++t) {
            const std::uint64_t trial_seed =
                mix_seed(subject_seed, 10000 + 1000 * r + 500 * static_cast<std::size_t>(phase) + t);
            TrialTrace trace = run_trial(spec, targets[t], ctx, user, trial_seed);
            TrialScore score{s, r, t, category, spec.kind, spec.dofs, is_training, targets[t], trace.mae};
            (is_training ? training : testing)[category].push_back(trace.mae);
            if (sink) sink(result.arm, score, trace);
            result.trials.push_back(std::move(score));
          }
        }
      }
      for (auto& [cat, v] : testing) result.subject_testing[cat].push_back(mean_of(v));
      for (auto& [cat, v] : training) result.subject_training[cat].push_back(mean_of(v));
    }
    report.arms.push_back(std::move(result));
  }

  // Discrete arms cannot match graded targets; they are reported but not compared.
  for (std::size_t i = 0; i < report.arms.size(); ++i) {
    for (std::size_t j = i + 1; j < report.arms.size(); ++j) {
      const auto& a = report.arms[i];
      const auto& b = report.arms[j];
      if (a.arm.mode != ControlMode::kContinuous || b.arm.mode != ControlMode::kContinuous) continue;
      for (auto cat : kCategories) {
        const std::string key(cat);
        auto ia = a.subject_testing.find(key);
        auto ib = b.subject_testing.find(key);
        if (ia == a.subject_testing.end() || ib == b.subject_testing.end()) continue;
        Comparison c;
        c.a = a.arm.name;
        c.b = b.arm.name;
        c.category = key;
        c.test = mann_whitney_u(ia->second, ib->second);
        c.p_corrected = std::min(1.0, c.test.p * cfg.bonferroni);
        c.median_a = median(ia->second);
        c.median_b = median(ib->second);
        report.comparisons.push_back(std::move(c));
      }
    }
  }
  return report;
}

}  // namespace myoloop
