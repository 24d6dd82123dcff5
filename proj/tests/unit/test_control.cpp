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

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "myoloop/error.hpp"

using namespace myoloop;
using namespace myoloop::testing;

namespace {

ReferenceActivity make_ref(std::string id, Dof dof, ChannelSamples bank, std::optional<int> group = {}) {
  ReferenceActivity r;
  r.id = std::move(id);
  r.dof = dof;
  r.target_pose = dof_pose(dof);
  r.antagonist_group = group;
  r.bank = std::move(bank);
  return r;
}

ChannelSamples bank_for(const std::vector<double>& a, std::uint64_t seed, std::size_t n = 64) {
  Rng rng(seed);
  return to_samples(synth_window(a, default_pattern(), n, rng));
}

ReferenceSet synthetic_refs(std::uint64_t seed = 1) {
  std::vector<ReferenceActivity> refs;
  refs.push_back(make_ref("rest", Dof::kRest, constant_samples(0.0, 64)));
  refs.push_back(make_ref("I", Dof::kI, bank_for({1, 0, 0}, seed), 0));
  refs.push_back(make_ref("II", Dof::kII, bank_for({0, 1, 0}, seed + 1)));
  refs.push_back(make_ref("III", Dof::kIII, bank_for({0, 0, 1}, seed + 2), 0));
  return ReferenceSet(std::move(refs));
}

ChannelSamples live_for(const ReferenceSet& refs, const std::vector<double>& a, std::uint64_t seed) {
  Rng rng(seed);
  return to_samples(synth_window(a, default_pattern(), refs.mixture_banks()[0].size(), rng));
}

double grid_oracle(const ChannelSamples& live, const ReferenceSet& refs, std::uint64_t perm_seed) {
  const MixtureObjective obj(refs.mixture_banks(), perm_seed);
  const auto prepared = obj.prepare(live);
  double best = INFINITY;
  std::vector<double> w(3);
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j)
      for (int k = 0; k <= 20; ++k) {
        w = {i * 0.05, j * 0.05, k * 0.05};
        best = std::min(best, obj.distance_prepared(prepared, w));
      }
  return best;
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("mode strings round-trip") {
    CHECK(control_mode_from_string("discrete") == ControlMode::kDiscrete);
    CHECK(control_mode_from_string(to_string(ControlMode::kContinuous)) == ControlMode::kContinuous);
    CHECK_THROWS_AS(control_mode_from_string("hybrid"), Error);
  }

  TEST_CASE("controller config validation") {
    ControllerConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.steps = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.h = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }

  TEST_CASE("discrete classification of an exact bank") {
    const auto refs = synthetic_refs();
    for (std::size_t j = 0; j < refs.size(); ++j)
      CHECK(classify_discrete(refs.refs()[j].bank, refs, 1e-6) == j);
  }

  TEST_CASE("all-zero live input is classified as rest") {
    const auto refs = default_refs();
    CHECK(classify_discrete(constant_samples(0.0, 64), refs, *refs.threshold()) == 0u);
  }

  TEST_CASE("a half-half blend of two references matches nothing") {
    const auto refs = synthetic_refs();
    ChannelSamples blend;
    const auto& a = refs.refs()[1].bank;
    const auto& b = refs.refs()[2].bank;
    for (std::size_t c = 0; c < kChannels; ++c)
      for (std::size_t k = 0; k < a.ch[c].size(); ++k) blend.ch[c].push_back(0.5 * a.ch[c][k] + 0.5 * b.ch[c][k]);
    const auto d = reference_distances(blend, refs);
    const double theta = 0.5 * *std::min_element(d.begin(), d.end());
    CHECK_FALSE(classify_discrete(blend, refs, theta).has_value());
  }

  TEST_CASE("classification argmin is scale invariant") {
    const auto refs = synthetic_refs();
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const auto live = live_for(refs, {u(rng), u(rng), u(rng)}, 50 + t);
      const double lambda = 0.5 + 2.0 * u(rng);
      std::vector<ReferenceActivity> sc = refs.refs();
      for (auto& r : sc) r.bank = scaled(r.bank, lambda);
      const ReferenceSet refs2(sc);
      const auto a = classify_discrete(live, refs, 1e9);
      const auto b = classify_discrete(scaled(live, lambda), refs2, 1e9);
      CHECK(a == b);
    }
  }

  TEST_CASE("threshold of zero-variance references") {
    std::vector<ReferenceActivity> r;
    r.push_back(make_ref("rest", Dof::kRest, constant_samples(0.1, 16)));
    r.push_back(make_ref("I", Dof::kI, constant_samples(0.5, 16)));
    const ReferenceSet refs(r);
    std::vector<std::vector<EmgWindow>> held(2);
    for (std::size_t i = 0; i < 2; ++i)
      for (int k = 0; k < 3; ++k) {
        EmgWindow w;
        for (auto& ch : w.samples) ch.assign(16, i == 0 ? 0.2 : 0.6);
        held[i].push_back(w);
      }
    CHECK(calibrate_threshold(refs, held) == doctest::Approx(0.1));
  }

  TEST_CASE("default threshold sits below every cross-reference distance") {
    const auto& refs = default_refs();
    REQUIRE(refs.threshold());
    for (std::size_t i = 0; i < refs.size(); ++i)
      for (std::size_t j = 0; j < refs.size(); ++j) {
        if (i == j) continue;
        const double d = reference_distances(refs.refs()[i].bank, refs)[j];
        CHECK(*refs.threshold() < d);
      }
  }

  TEST_CASE("threshold scales with intensity") {
    const auto refs = synthetic_refs();
    std::vector<std::vector<EmgWindow>> held(refs.size());
    Rng rng(4);
    const std::vector<std::vector<double>> acts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (std::size_t i = 0; i < refs.size(); ++i) held[i] = synth_windows(acts[i], 4, 64, rng);
    const double t1 = calibrate_threshold(refs, held);
    const double lambda = 2.5;
    std::vector<ReferenceActivity> sc = refs.refs();
    for (auto& r : sc) r.bank = scaled(r.bank, lambda);
    auto held2 = held;
    for (auto& ws : held2)
      for (auto& w : ws)
        for (auto& ch : w.samples)
          for (auto& x : ch) x *= lambda;
    CHECK(calibrate_threshold(ReferenceSet(sc), held2) == doctest::Approx(lambda * t1).epsilon(1e-12));
  }

  TEST_CASE("threshold needs held-out windows for every reference") {
    const auto refs = synthetic_refs();
    std::vector<std::vector<EmgWindow>> held(refs.size() - 1);
    CHECK_THROWS_AS(calibrate_threshold(refs, held), Error);
  }

  TEST_CASE("weights stay at a one-hot fixed point") {
    const auto refs = synthetic_refs();
    ControllerConfig cfg;
    for (std::size_t j = 0; j < refs.rank(); ++j) {
      auto state = make_state(refs, 9);
      state.prev_weights.assign(3, 0.0);
      state.prev_weights[j] = 1.0;
      const auto w = infer_weights(refs.mixture_banks()[j], refs, state, cfg);
      CHECK(w == state.prev_weights);
    }
  }

  TEST_CASE("weights recover a synthesized blend") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    auto state = make_state(refs, 5);
    const std::vector<double> a{0.6, 0.3, 0.0};
    const auto live = live_for(refs, a, 77);
    // A few control steps of warm start, as in the running loop.
    WeightVector w;
    for (int k = 0; k < 3; ++k) {
      w = infer_weights(live, refs, state, cfg);
      state.prev_weights = w;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) err = std::max(err, std::abs(w[i] - a[i]));
    CHECK(err <= 0.1);
    const MixtureObjective obj(refs.mixture_banks(), state.perm_seed);
    CHECK(obj.distance(live, w) <= grid_oracle(live, refs, state.perm_seed) * 1.05);
  }

  TEST_CASE("zero live input drives weights to zero") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    for (int t = 0; t < 5; ++t) {
      auto state = make_state(refs, 1);
      state.prev_weights = {u(rng), u(rng), u(rng)};
      const auto w = infer_weights(constant_samples(0.0, 64), refs, state, cfg);
      for (double x : w) CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
    }
  }

  TEST_CASE("antagonist resolution") {
    const auto refs = synthetic_refs();
    CHECK(resolve_antagonists(std::vector<double>{0.7, 0.4, 0.2}, refs) == WeightVector{0.7, 0.4, 0.0});
    CHECK(resolve_antagonists(std::vector<double>{0.0, 0.0, 0.0}, refs) == WeightVector{0.0, 0.0, 0.0});
    CHECK(resolve_antagonists(std::vector<double>{0.5, 0.3, 0.5}, refs) == WeightVector{0.5, 0.3, 0.0});
    CHECK(resolve_antagonists(std::vector<double>{0.1, 0.3, 0.5}, refs) == WeightVector{0.0, 0.3, 0.5});
  }

  TEST_CASE("antagonist groups hold at most one nonzero weight") {
    const auto refs = synthetic_refs();
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const auto w = resolve_antagonists(std::vector<double>{u(rng), u(rng), u(rng)}, refs);
      CHECK((w[0] == 0.0 || w[2] == 0.0));
    }
  }

  TEST_CASE("smoothing decays geometrically from a pose") {
    const auto refs = synthetic_refs();
    ControllerConfig cfg;
    auto state = make_state(refs);
    MotorPose p{0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
    state.prev_target = p;
    for (int k = 1; k <= 30; ++k) {
      const auto out = smooth_target(std::vector<double>{0, 0, 0}, refs, state, cfg);
      for (std::size_t m = 0; m < kMotors; ++m) CHECK(std::abs(out[m] - std::pow(0.7, k) * p[m]) < 1e-12);
    }
  }

  TEST_CASE("smoothing fixed point and power grip series") {
    const auto refs = synthetic_refs();
    ControllerConfig cfg;
    auto state = make_state(refs);
    const std::vector<double> w{0.4, 0.6, 0.0};
    state.prev_target = blend_pose(w, refs);
    const auto fixed = smooth_target(w, refs, state, cfg);
    const auto blend = blend_pose(w, refs);
    for (std::size_t m = 0; m < kMotors; ++m) CHECK(fixed[m] == doctest::Approx(blend[m]).epsilon(1e-15));

    state = make_state(refs);
    for (int k = 1; k <= 50; ++k) {
      const auto out = smooth_target(std::vector<double>{1, 0, 0}, refs, state, cfg);
      for (std::size_t m = 0; m < kFingers; ++m) CHECK(std::abs(out[m] - (1.0 - std::pow(0.7, k))) < 1e-12);
      CHECK(out[kWrist] == 0.0);
      if (k == 1) CHECK(out[0] == doctest::Approx(0.3));
      if (k == 2) CHECK(out[0] == doctest::Approx(0.51));
    }
  }

  TEST_CASE("smoothed output is a convex combination") {
    const auto refs = synthetic_refs();
    ControllerConfig cfg;
    auto state = make_state(refs);
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      const std::vector<double> w{u(rng), u(rng), u(rng)};
      const auto prev = state.prev_target;
      const auto blend = blend_pose(w, refs);
      const auto out = smooth_target(w, refs, state, cfg);
      for (std::size_t m = 0; m < kMotors; ++m) {
        CHECK(out[m] >= std::min(prev[m], blend[m]) - 1e-15);
        CHECK(out[m] <= std::max(prev[m], blend[m]) + 1e-15);
        CHECK(out[m] >= 0.0);
        CHECK(out[m] <= 1.0);
      }
    }
  }

  TEST_CASE("discrete control closes fully in one step") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    cfg.mode = ControlMode::kDiscrete;
    auto state = make_state(refs);
    EmgWindow w;
    w.samples = refs.refs()[1].bank.ch;
    const auto out = control_step(w, refs, state, cfg);
    CHECK(out == refs.refs()[1].target_pose);
    for (std::size_t f = 0; f < kFingers; ++f) CHECK(out[f] == 1.0);
  }

  TEST_CASE("discrete control holds the previous command on no match") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    cfg.mode = ControlMode::kDiscrete;
    cfg.threshold = 1e-9;
    auto state = make_state(refs);
    state.prev_target = dof_pose(Dof::kII);
    EmgWindow w;
    w.samples = live_for(refs, {0.5, 0.5, 0.0}, 3).ch;
    CHECK(control_step(w, refs, state, cfg) == dof_pose(Dof::kII));
    CHECK_FALSE(state.last_match.has_value());
  }

  TEST_CASE("continuous control follows the power grip series on an exact bank") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    auto state = make_state(refs, 2);
    EmgWindow w;
    w.samples = refs.mixture_banks()[0].ch;
    for (int k = 1; k <= 15; ++k) {
      const auto out = control_step(w, refs, state, cfg);
      for (std::size_t f = 0; f < kFingers; ++f) CHECK(std::abs(out[f] - (1.0 - std::pow(0.7, k))) < 0.03);
    }
  }

  TEST_CASE("alternating input keeps the trajectory strictly inside the range") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    auto state = make_state(refs, 3);
    EmgWindow on, off;
    on.samples = refs.mixture_banks()[0].ch;
    off.samples = constant_samples(0.0, 64).ch;
    for (int k = 0; k < 40; ++k) {
      const auto out = control_step(k % 2 ? off : on, refs, state, cfg);
      CHECK(out[0] > 0.0);
      CHECK(out[0] < 1.0);
    }
  }

  TEST_CASE("warm start settles on stationary input") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    int settled = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto state = make_state(refs, s);
      Rng rng(s + 300);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> a{u(rng), u(rng), 0.0};
      EmgWindow w;
      w.samples = live_for(refs, a, s + 400).ch;
      WeightVector prev;
      for (int k = 0; k < 10; ++k) {
        control_step(w, refs, state, cfg);
        if (k == 9) {
          double delta = 0.0;
          for (std::size_t i = 0; i < 3; ++i) delta = std::max(delta, std::abs(state.prev_weights[i] - prev[i]));
          if (delta < 1e-3) ++settled;
        }
        prev = state.prev_weights;
      }
    }
    CHECK(settled == 20);
  }

  TEST_CASE("control outputs stay in range for arbitrary input") {
    const auto& refs = default_refs();
    ControllerConfig cfg;
    auto state = make_state(refs, 4);
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int k = 0; k < 30; ++k) {
      EmgWindow w;
      for (auto& ch : w.samples) {
        ch.resize(40);
        for (auto& x : ch) x = u(rng);
      }
      for (double p : control_step(w, refs, state, cfg)) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
      for (double x : state.last_weights) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }

  TEST_CASE("control requires calibrated references") {
    ControllerConfig cfg;
    ControllerState state;
    EmgWindow w;
    for (auto& ch : w.samples) ch.assign(16, 0.0);
    try {
      control_step(w, ReferenceSet{}, state, cfg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNotCalibrated);
    }
  }
}
