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

#include "myoloop/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "myoloop/error.hpp"

namespace myoloop {

std::string_view to_string(ControlMode mode) noexcept {
  return mode == ControlMode::kDiscrete ? "discrete" : "continuous";
}

ControlMode control_mode_from_string(std::string_view s) {
  if (s == "discrete") return ControlMode::kDiscrete;
  if (s == "continuous") return ControlMode::kContinuous;
  throw Error(Errc::kConfigError, "unknown control mode '" + std::string(s) + "'");
}

void validate(const ControllerConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    throw Error(Errc::kConfigError, "alpha must be in (0, 1]");
  if (cfg.steps < 1) throw Error(Errc::kConfigError, "steps must be >= 1");
  if (!(cfg.lr > 0.0)) throw Error(Errc::kConfigError, "lr must be > 0");
  if (!(cfg.h > 0.0)) throw Error(Errc::kConfigError, "h must be > 0");
  if (cfg.threshold && !(*cfg.threshold > 0.0))
    throw Error(Errc::kConfigError, "threshold must be > 0");
}

ReferenceSet::ReferenceSet(std::vector<ReferenceActivity> refs, std::optional<double> threshold)
    : refs_(std::move(refs)) {
  std::size_t bank = 0;
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    const auto& r = refs_[i];
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (i == 0 && c == 0) bank = r.bank.ch[c].size();
      if (r.bank.ch[c].size() != bank || bank == 0)
        throw Error(Errc::kDimError, "reference '" + r.id + "' bank length mismatch");
    }
    if (r.dof != Dof::kRest) {
      mixture_.push_back(i);
      mixture_banks_.push_back(r.bank);
    }
  }
  weight_floor_.assign(mixture_.size(), 0.0);
  weight_ceiling_.assign(mixture_.size(), 1.0);
  if (threshold) set_threshold(*threshold);
}

void ReferenceSet::set_weight_range(std::vector<double> floor, std::vector<double> ceiling) {
  if (floor.size() != mixture_.size() || ceiling.size() != mixture_.size())
    throw Error(Errc::kDimError, "weight range size mismatch");
  for (std::size_t i = 0; i < floor.size(); ++i)
    if (!(floor[i] >= 0.0 && ceiling[i] <= 1.0 && ceiling[i] - floor[i] >= 0.1))
      throw Error(Errc::kConfigError, "weight range must satisfy 0 <= floor < ceiling - 0.1 <= 0.9");
  weight_floor_ = std::move(floor);
  weight_ceiling_ = std::move(ceiling);
}

void ReferenceSet::set_threshold(double threshold) {
  if (!(threshold > 0.0)) throw Error(Errc::kConfigError, "threshold must be > 0");
  threshold_ = threshold;
}

ControllerState make_state(const ReferenceSet& refs, std::uint64_t perm_seed) {
  ControllerState s;
  s.prev_weights.assign(refs.rank(), 0.0);
  s.last_weights.assign(refs.rank(), 0.0);
  s.perm_seed = perm_seed;
  return s;
}

namespace {

double bank_distance(const ChannelSamples& live, const ChannelSamples& bank) {
  double total = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) total += w1_1d(live.ch[c], bank.ch[c]);
  return total / static_cast<double>(kChannels);
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

struct Fit {
  WeightVector w;
  double distance = 0.0;
};

Fit descend(const ChannelSamples& live, const ReferenceSet& refs, const ControllerState& state,
            const ControllerConfig& cfg) {
  const std::size_t r = refs.rank();
  MixtureObjective objective(refs.mixture_banks(), state.perm_seed);
  const ChannelSamples prepared = objective.prepare(live);
  Fit fit;
  fit.w = state.prev_weights.size() == r ? state.prev_weights : WeightVector(r, 0.0);
  for (auto& x : fit.w) x = std::clamp(x, 0.0, 1.0);
  // Projected descent; a step that would raise the loss is rejected and the
  // step size halved, so the loss is nonincreasing within a control step.
  double current = objective.distance_prepared(prepared, fit.w);
  double lr = cfg.lr;
  WeightVector candidate(r);
  for (int step = 0; step < cfg.steps; ++step) {
    const WeightVector g = fd_gradient(objective, prepared, fit.w, cfg.h);
    for (std::size_t i = 0; i < r; ++i) candidate[i] = std::clamp(fit.w[i] - lr * g[i], 0.0, 1.0);
    const double next = objective.distance_prepared(prepared, candidate);
    if (next <= current) {
      fit.w = candidate;
      current = next;
    } else {
      lr *= 0.5;
    }
  }
  fit.distance = current;
  return fit;
}

}  // namespace

std::vector<double> reference_distances(const ChannelSamples& live, const ReferenceSet& refs) {
  std::vector<double> d;
  d.reserve(refs.size());
  for (const auto& r : refs.refs()) d.push_back(bank_distance(live, r.bank));
  return d;
}

std::optional<std::size_t> classify_discrete(const ChannelSamples& live, const ReferenceSet& refs,
                                             double threshold) {
  if (refs.empty()) throw Error(Errc::kNotCalibrated, "no references");
  const auto d = reference_distances(live, refs);
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] < d[best]) best = i;
  if (d[best] >= threshold) return std::nullopt;
  return best;
}

double calibrate_threshold(const ReferenceSet& refs,
                           std::span<const std::vector<EmgWindow>> held_out) {
  if (held_out.size() != refs.size())
    throw Error(Errc::kInsufficientCalibration, "held-out windows missing for some references");
  std::vector<double> d;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (held_out[i].size() < 3)
      throw Error(Errc::kInsufficientCalibration,
                  "reference '" + refs.refs()[i].id + "' needs >= 3 held-out windows");
    for (const auto& w : held_out[i]) d.push_back(bank_distance(to_samples(w), refs.refs()[i].bank));
  }
  const double mu = mean_of(d);
  double ss = 0.0;
  for (double x : d) ss += (x - mu) * (x - mu);
  const double sd = d.size() > 1 ? std::sqrt(ss / static_cast<double>(d.size() - 1)) : 0.0;
  return std::max(mu + 2.0 * sd, std::numeric_limits<double>::min());
}

WeightVector infer_weights(const ChannelSamples& live, const ReferenceSet& refs,
                           const ControllerState& state, const ControllerConfig& cfg) {
  if (refs.rank() == 0) throw Error(Errc::kNotCalibrated, "no non-rest references");
  return descend(live, refs, state, cfg).w;
}

namespace {

WeightVector settle(const EmgWindow& window, const ReferenceSet& refs, const ControllerConfig& cfg,
                    std::uint64_t perm_seed) {
  ControllerState state = make_state(refs, perm_seed);
  const ChannelSamples live = to_samples(window);
  // A few warm-started steps, as the running loop would settle.
  for (int k = 0; k < 3; ++k) state.prev_weights = descend(live, refs, state, cfg).w;
  return state.prev_weights;
}

}  // namespace

WeightRange calibrate_weight_range(const ReferenceSet& refs, std::span<const EmgWindow> rest_windows,
                                   std::span<const std::vector<EmgWindow>> full_windows,
                                   const ControllerConfig& cfg, std::uint64_t perm_seed) {
  const std::size_t r = refs.rank();
  if (r == 0) throw Error(Errc::kNotCalibrated, "no non-rest references");
  if (rest_windows.size() < 3 || full_windows.size() != r)
    throw Error(Errc::kInsufficientCalibration, "weight range needs rest and full-activation windows");
  WeightRange range;
  std::vector<std::vector<double>> rest(r);
  for (const auto& window : rest_windows) {
    const auto w = settle(window, refs, cfg, perm_seed);
    for (std::size_t i = 0; i < r; ++i) rest[i].push_back(w[i]);
  }
  for (std::size_t i = 0; i < r; ++i) {
    const double mu = mean_of(rest[i]);
    double ss = 0.0;
    for (double x : rest[i]) ss += (x - mu) * (x - mu);
    range.floor.push_back(mu + 2.0 * std::sqrt(ss / static_cast<double>(rest[i].size() - 1)));

    if (full_windows[i].empty())
      throw Error(Errc::kInsufficientCalibration, "weight range needs full-activation windows");
    std::vector<double> full;
    for (const auto& window : full_windows[i]) full.push_back(settle(window, refs, cfg, perm_seed)[i]);
    range.ceiling.push_back(mean_of(full));
  }
  return range;
}

WeightVector apply_weight_range(std::span<const double> w, const ReferenceSet& refs) {
  if (w.size() != refs.rank()) throw Error(Errc::kDimError, "weights do not match references");
  WeightVector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double f = refs.weight_floor()[i];
    out[i] = std::clamp((w[i] - f) / (refs.weight_ceiling()[i] - f), 0.0, 1.0);
  }
  return out;
}

WeightVector resolve_antagonists(std::span<const double> w, const ReferenceSet& refs) {
  if (w.size() != refs.rank()) throw Error(Errc::kDimError, "weights do not match references");
  WeightVector out(w.begin(), w.end());
  std::map<int, std::size_t> winner;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& group = refs.mixture_ref(i).antagonist_group;
    if (!group) continue;
    auto [it, inserted] = winner.emplace(*group, i);
    if (inserted) continue;
    if (w[i] > w[it->second]) {
      out[it->second] = 0.0;
      it->second = i;
    } else {
      out[i] = 0.0;
    }
  }
  return out;
}

MotorPose blend_pose(std::span<const double> w, const ReferenceSet& refs) {
  if (w.size() != refs.rank()) throw Error(Errc::kDimError, "weights do not match references");
  MotorPose blend{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& p = refs.mixture_ref(i).target_pose;
    for (std::size_t m = 0; m < kMotors; ++m) blend[m] += w[i] * p[m];
  }
  for (auto& b : blend) b = std::clamp(b, 0.0, 1.0);
  return blend;
}

MotorPose smooth_target(std::span<const double> w_resolved, const ReferenceSet& refs,
                        ControllerState& state, const ControllerConfig& cfg) {
  const MotorPose blend = blend_pose(w_resolved, refs);
  MotorPose out;
  for (std::size_t m = 0; m < kMotors; ++m)
    out[m] = std::clamp(cfg.alpha * blend[m] + (1.0 - cfg.alpha) * state.prev_target[m], 0.0, 1.0);
  state.prev_target = out;
  return out;
}

MotorPose control_step(const EmgWindow& window, const ReferenceSet& refs, ControllerState& state,
                       const ControllerConfig& cfg) {
  if (refs.empty()) throw Error(Errc::kNotCalibrated, "no references");
  const ChannelSamples live = to_samples(window);
  MotorPose out;
  if (cfg.mode == ControlMode::kDiscrete) {
    const auto threshold = cfg.threshold ? cfg.threshold : refs.threshold();
    if (!threshold) throw Error(Errc::kNotCalibrated, "discrete mode needs a threshold");
    const auto d = reference_distances(live, refs);
    const auto match = classify_discrete(live, refs, *threshold);
    state.last_distance = *std::min_element(d.begin(), d.end());
    state.last_match = match;
    if (match) {
      state.prev_target = refs.refs()[*match].target_pose;
      state.last_weights.assign(refs.rank(), 0.0);
      for (std::size_t i = 0; i < refs.rank(); ++i)
        if (refs.mixture()[i] == *match) state.last_weights[i] = 1.0;
    }
    out = state.prev_target;
  } else {
    if (refs.rank() == 0) throw Error(Errc::kNotCalibrated, "no non-rest references");
    Fit fit = descend(live, refs, state, cfg);
    state.last_distance = fit.distance;
    state.last_match.reset();
    state.last_weights = resolve_antagonists(apply_weight_range(fit.w, refs), refs);
    state.prev_weights = std::move(fit.w);
    out = smooth_target(state.last_weights, refs, state, cfg);
  }
  ++state.step_index;
  return out;
}

}  // namespace myoloop
