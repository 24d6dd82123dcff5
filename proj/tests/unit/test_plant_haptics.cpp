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

#include "myoloop/error.hpp"
#include "myoloop/haptics.hpp"
#include "myoloop/plant.hpp"

using namespace myoloop;

namespace {

MotorPose pose(double v) {
  MotorPose p;
  p.fill(v);
  return p;
}

HandState settle(const MotorPose& target, const VirtualObject& obj, const PlantConfig& cfg,
                 int steps = 300) {
  HandState s;
  for (int i = 0; i < steps; ++i) s = plant_step(target, obj, s, cfg);
  return s;
}

}  // namespace

TEST_SUITE("plant") {
  TEST_CASE("rate limit arithmetic") {
    const PlantConfig cfg;
    HandState s = plant_step(pose(1.0), VirtualObject{}, HandState{}, cfg);
    for (double p : s.pos) CHECK(p == doctest::Approx(0.01));
    for (int i = 1; i < 100; ++i) s = plant_step(pose(1.0), VirtualObject{}, s, cfg);
    for (double p : s.pos) CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
    s = plant_step(pose(1.0), VirtualObject{}, s, cfg);
    for (double p : s.pos) CHECK(p == 1.0);
    CHECK(s.t_ms == doctest::Approx(1010.0));
  }

  TEST_CASE("rigid object is a hard stop") {
    const PlantConfig cfg;
    const auto obj = VirtualObject::uniform(0.5, 100.0);
    const auto s = settle(pose(1.0), obj, cfg);
    for (std::size_t f = 0; f < kFingers; ++f) {
      CHECK(s.pos[f] == doctest::Approx(0.5));
      CHECK(s.contact[f]);
      CHECK(s.torque[f] == 1.0);
    }
    CHECK(s.pos[kWrist] == doctest::Approx(1.0));
    CHECK(s.torque[kWrist] == 0.0);
  }

  TEST_CASE("compliant object steady torque and force") {
    const PlantConfig cfg;
    const auto obj = VirtualObject::uniform(0.5, 1.0);
    const auto s = settle(pose(0.8), obj, cfg);
    const auto force = grasp_force(s, cfg);
    for (std::size_t f = 0; f < kFingers; ++f) {
      CHECK(s.torque[f] == doctest::Approx(0.4));
      CHECK(force[f] == doctest::Approx(0.3));
    }
  }

  TEST_CASE("grasp force boundaries") {
    const PlantConfig cfg;
    for (double f : grasp_force(HandState{}, cfg)) CHECK(f == 0.0);
    HandState s;
    s.torque.fill(cfg.tau_spring);
    for (double f : grasp_force(s, cfg)) CHECK(f == 0.0);
  }

  TEST_CASE("position never overshoots and approaches monotonically") {
    const PlantConfig cfg;
    Rng rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      HandState s;
      const MotorPose target{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      for (int i = 0; i < 150; ++i) {
        const auto next = plant_step(target, VirtualObject{}, s, cfg);
        for (std::size_t m = 0; m < kMotors; ++m) {
          CHECK(std::abs(next.pos[m] - s.pos[m]) <= cfg.max_step() + 1e-15);
          CHECK(std::abs(next.pos[m] - target[m]) <= std::abs(s.pos[m] - target[m]));
        }
        s = next;
      }
    }
  }

  TEST_CASE("contact implies position at the closure") {
    const PlantConfig cfg;
    VirtualObject obj = VirtualObject::uniform(0.4, 0.8);
    obj.closure = {0.3, 0.4, 0.5, 0.6, 0.7};
    HandState s;
    for (int i = 0; i < 120; ++i) {
      s = plant_step(pose(0.9), obj, s, cfg);
      for (std::size_t f = 0; f < kFingers; ++f)
        if (s.contact[f]) CHECK(std::abs(s.pos[f] - obj.closure[f]) <= cfg.max_step());
    }
  }

  TEST_CASE("steady force is Lipschitz in the command") {
    const PlantConfig cfg;
    const auto obj = VirtualObject::uniform(0.3, 0.9);
    for (double c = 0.3; c < 0.95; c += 0.05) {
      const auto a = grasp_force(settle(pose(c), obj, cfg), cfg);
      const auto b = grasp_force(settle(pose(c + 0.05), obj, cfg), cfg);
      for (std::size_t f = 0; f < kFingers; ++f) CHECK(std::abs(b[f] - a[f]) <= 0.9 * 0.05 + 1e-12);
    }
  }

  TEST_CASE("config validation") {
    PlantConfig cfg;
    cfg.rate = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.tau_spring = 1.0;
    CHECK_THROWS_AS(validate(cfg), Error);
    VirtualObject obj = VirtualObject::uniform(1.5, 1.0);
    CHECK_THROWS_AS(validate(obj), Error);
  }
}

TEST_SUITE("haptics") {
  TEST_CASE("open hand renders positions and no pressure") {
    const PlantConfig cfg;
    HandState s;
    s.pos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.0};
    const auto f = render(s, cfg);
    for (std::size_t m = 0; m < kModules; ++m) {
      CHECK(f.tangential[m] == s.pos[m]);
      CHECK(f.normal[m] == 0.0);
    }
  }

  TEST_CASE("normal intensity boundaries") {
    const PlantConfig cfg;
    HandState s;
    s.torque.fill(cfg.tau_spring);
    for (double n : render(s, cfg).normal) CHECK(n == 0.0);
    s.torque.fill(1.0);
    for (double n : render(s, cfg).normal) CHECK(n == 1.0);
  }

  TEST_CASE("vibration closed forms") {
    auto v = vibration_profile(0.0);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == doctest::Approx(std::exp(-1.0 / 0.18)));
    CHECK(v[1] == doctest::Approx(0.00387).epsilon(0.01));
    CHECK(v[1] < 0.01);
    v = vibration_profile(0.5);
    CHECK(v[2] == 1.0);
    CHECK(v[1] == v[3]);
    v = vibration_profile(1.0);
    CHECK(v[4] == 1.0);
    CHECK(v[3] < 0.01);
  }

  TEST_CASE("vibration sigma bound") {
    CHECK(max_vibration_sigma() == doctest::Approx(1.0 / std::sqrt(2.0 * std::log(100.0))));
    CHECK_NOTHROW(vibration_profile(0.3, max_vibration_sigma()));
    CHECK_THROWS_AS(vibration_profile(0.3, 0.33), Error);
    CHECK_THROWS_AS(vibration_profile(0.3, 0.0), Error);
  }

  TEST_CASE("one-percent rule and sequential sweep") {
    std::size_t last_arg = 0;
    for (int i = 0; i <= 1000; ++i) {
      const auto v = vibration_profile(i * 1e-3);
      const auto arg = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
      CHECK(arg >= last_arg);
      last_arg = arg;
      if (v[arg] >= 0.999)
        for (std::size_t m = 0; m < kModules; ++m)
          if (m != arg) CHECK(v[m] < 0.01);
      for (double x : v) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }

  TEST_CASE("rigid objects are distinguishable by tangential feedback") {
    const PlantConfig cfg;
    for (double k = 0.2; k <= 0.8; k += 0.1) {
      const auto a = render(settle(pose(1.0), VirtualObject::uniform(k, 50.0), cfg), cfg);
      const auto b = render(settle(pose(1.0), VirtualObject::uniform(k + 0.1, 50.0), cfg), cfg);
      double diff = 0.0;
      for (std::size_t m = 0; m < kModules; ++m) diff = std::max(diff, std::abs(a.tangential[m] - b.tangential[m]));
      CHECK(diff >= 0.1 - 1e-9);
    }
  }

  TEST_CASE("compliant objects are distinguishable by normal feedback") {
    const PlantConfig cfg;
    for (double s = 0.2; s <= 1.2; s += 0.2) {
      const auto a = render(settle(pose(1.0), VirtualObject::uniform(0.5, s), cfg), cfg);
      const auto b = render(settle(pose(1.0), VirtualObject::uniform(0.5, s + 0.2), cfg), cfg);
      double diff = 0.0;
      for (std::size_t m = 0; m < kModules; ++m) diff = std::max(diff, std::abs(a.normal[m] - b.normal[m]));
      CHECK(diff >= 0.1);
    }
  }

  TEST_CASE("render is a pure function of state") {
    const PlantConfig cfg;
    HandState s;
    s.pos = {0.2, 0.4, 0.6, 0.8, 1.0, 0.37};
    s.torque = {0.1, 0.5, 0.9, 1.0, 0.3, 0.0};
    s.t_ms = 123.0;
    CHECK(render(s, cfg) == render(s, cfg));
    CHECK(render(s, cfg).t_ms == 123.0);
  }
}
