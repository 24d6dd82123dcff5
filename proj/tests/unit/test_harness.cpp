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
#include "myoloop/harness.hpp"

using namespace myoloop;
using namespace myoloop::testing;

namespace {

TaskSpec position_task(std::vector<Dof> dofs, double duration = 5.0) {
  TaskSpec s;
  s.kind = TaskKind::kPosition;
  s.dofs = std::move(dofs);
  s.trials = 1;
  s.duration_s = duration;
  return s;
}

UserModel quiet_user() {
  UserModel u;
  u.noise = 0.0;
  return u;
}

TrialTrace trace_at(const std::vector<double>& positions, TaskSpec spec) {
  TrialTrace t;
  t.spec = std::move(spec);
  for (int k = 0; k < 20; ++k) {
    TraceStep s;
    for (std::size_t m = 0; m < kMotors; ++m) s.hand.pos[m] = positions[m];
    t.steps.push_back(s);
  }
  return t;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("task spec validation") {
    CHECK_NOTHROW(validate(position_task({Dof::kI, Dof::kII})));
    CHECK_THROWS_AS(validate(position_task({Dof::kI, Dof::kIII})), Error);
    CHECK_THROWS_AS(validate(position_task({})), Error);
    CHECK_THROWS_AS(validate(position_task({Dof::kI, Dof::kII, Dof::kIII})), Error);
    TaskSpec force = position_task({Dof::kII});
    force.kind = TaskKind::kForce;
    CHECK_THROWS_AS(validate(force), Error);
  }

  TEST_CASE("targets are in range, paired and deterministic") {
    TaskSpec s = position_task({Dof::kI, Dof::kII});
    s.trials = 10;
    Rng a(61), b(61);
    const auto ta = gen_targets(s, a);
    CHECK(ta.size() == 10);
    for (const auto& t : ta) {
      CHECK(t.size() == 2);
      for (double x : t) {
        CHECK(x >= kTargetLow);
        CHECK(x <= kTargetHigh);
      }
    }
    CHECK(ta == gen_targets(s, b));
  }

  TEST_CASE("closed-loop user at equilibrium only moves by noise") {
    const auto spec = position_task({Dof::kII});
    UserState st;
    st.activation = {0.0, 0.4, 0.0};
    Rng rng(62);
    const std::vector<double> percept{0.6};
    const auto a = user_step(quiet_user(), spec, Target{0.6}, percept, st, rng);
    CHECK(a[1] == 0.4);
  }

  TEST_CASE("zero gain is a random walk with the noise scale") {
    const auto spec = position_task({Dof::kII});
    UserModel u;
    u.gain = 0.0;
    u.noise = 0.02;
    Rng rng(63);
    double ss = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      UserState st;
      st.activation = {0.0, 0.5, 0.0};
      const std::vector<double> percept{0.1};
      const auto a = user_step(u, spec, Target{0.9}, percept, st, rng);
      ss += (a[1] - 0.5) * (a[1] - 0.5);
    }
    CHECK(std::sqrt(ss / n) == doctest::Approx(0.02).epsilon(0.03));
  }

  TEST_CASE("open-loop drift reaches the configured bias in expectation") {
    const SessionConfig session;
    UserModel u;
    u.kind = FeedbackLoop::kOpen;
    u.noise = 0.0;
    u.drift = 0.05;
    const auto spec = position_task({Dof::kII});
    Rng rng(64);
    double acc = 0.0;
    const int trials = 1000;
    const auto steps = static_cast<std::size_t>(5.0 * session.control_rate);
    for (int t = 0; t < trials; ++t)
      for (std::size_t k = 0; k < steps; ++k) acc += drift_increment(u, steps, rng);
    CHECK(acc / trials == doctest::Approx(0.05).epsilon(0.05));

    UserState st;
    st.drift = 0.05;
    st.efference = {0.0, 0.3, 0.0};
    CHECK(perceive_efference(st, spec, VirtualObject{}, session.plant)[0] == doctest::Approx(0.35));
  }

  TEST_CASE("wrist estimate inverts the vibration profile") {
    for (double x = 0.0; x <= 1.0; x += 0.01) CHECK(estimate_wrist(vibration_profile(x)) == doctest::Approx(x).epsilon(1e-9));
  }

  TEST_CASE("mae arithmetic and motor sets") {
    const auto spec = position_task({Dof::kI});
    const SessionConfig session;
    auto t = trace_at({0.55, 0.55, 0.55, 0.55, 0.55, 0.2}, spec);
    CHECK(mae(t, Dof::kI, 0.5, session) == doctest::Approx(5.0));
    CHECK(mae(t, Dof::kII, 0.2, session) == doctest::Approx(0.0));

    auto a = trace_at({0.4, 0.4, 0.4, 0.1, 0.9, 0.0}, spec);
    auto b = trace_at({0.4, 0.4, 0.4, 0.8, 0.2, 0.0}, spec);
    CHECK(mae(a, Dof::kIII, 0.3, session) == mae(b, Dof::kIII, 0.3, session));
    CHECK_THROWS_AS(mae(TrialTrace{}, Dof::kI, 0.5, session), Error);
  }

  TEST_CASE("zero-noise closed-loop user reaches a wrist target") {
    const auto& refs = default_refs();
    const SessionConfig session;
    TrialContext ctx{session, refs, default_force_object()};
    for (double target : {0.2, 0.5, 0.8}) {
      const auto trace = run_trial(position_task({Dof::kII}), Target{target}, ctx, quiet_user(), 7);
      // Terminal position is the mean over the scoring window; single steps
      // jitter with the EMG noise.
      CHECK(trace.mae <= 2.0);
    }
  }

  TEST_CASE("target at the initial state scores near zero") {
    const auto& refs = default_refs();
    const SessionConfig session;
    TrialContext ctx{session, refs, default_force_object()};
    const auto trace = run_trial(position_task({Dof::kII}), Target{0.0}, ctx, quiet_user(), 8);
    CHECK(trace.mae < 1.0);
  }

  TEST_CASE("trials are deterministic") {
    const auto& refs = default_refs();
    const SessionConfig session;
    TrialContext ctx{session, refs, default_force_object()};
    const auto spec = position_task({Dof::kI, Dof::kII}, 2.0);
    const auto a = run_trial(spec, Target{0.4, 0.6}, ctx, UserModel{}, 9);
    const auto b = run_trial(spec, Target{0.4, 0.6}, ctx, UserModel{}, 9);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      CHECK(a.steps[k].hand.pos == b.steps[k].hand.pos);
      CHECK(a.steps[k].weights == b.steps[k].weights);
    }
    CHECK(a.mae == b.mae);
  }

  TEST_CASE("trial needs calibrated references") {
    const SessionConfig session;
    const ReferenceSet empty;
    TrialContext ctx{session, empty, default_force_object()};
    try {
      run_trial(position_task({Dof::kII}), Target{0.5}, ctx, UserModel{}, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNotCalibrated);
    }
  }

  TEST_CASE("force targets give nondecreasing achieved force") {
    const auto& refs = default_refs();
    const SessionConfig session;
    TrialContext ctx{session, refs, default_force_object()};
    TaskSpec spec = position_task({Dof::kI});
    spec.kind = TaskKind::kForce;
    double last = -1.0;
    for (double target = 0.1; target <= 0.9 + 1e-9; target += 0.1) {
      std::vector<double> achieved;
      for (std::uint64_t s = 0; s < 9; ++s) {
        const auto trace = run_trial(spec, Target{target}, ctx, quiet_user(), 100 + s);
        const auto f = grasp_force(trace.steps.back().hand, session.plant);
        double m = 0.0;
        for (std::size_t i : dof_motors(Dof::kI)) m += f[i] / 5.0;
        achieved.push_back(m);
      }
      const double med = median(achieved);
      CHECK(med >= last - 1e-9);
      last = med;
    }
  }

  TEST_CASE("closed-loop testing is no better than training") {
    const auto& refs = default_refs();
    const SessionConfig session;
    TrialContext ctx{session, refs, default_force_object()};
    std::vector<double> train, test;
    for (std::uint64_t s = 0; s < 30; ++s) {
      auto spec = position_task({Dof::kI, Dof::kII});
      Rng rng(mix_seed(700, s));
      const auto target = gen_targets(spec, rng).front();
      spec.training = true;
      train.push_back(run_trial(spec, target, ctx, UserModel{}, s).mae);
      spec.training = false;
      test.push_back(run_trial(spec, target, ctx, UserModel{}, s).mae);
    }
    CHECK(median(test) >= median(train));
  }

  TEST_CASE("arm names") {
    CHECK(parse_arm("OLCC").loop == FeedbackLoop::kOpen);
    CHECK(parse_arm("CLDC").mode == ControlMode::kDiscrete);
    CHECK_THROWS_AS(parse_arm("XXCC"), Error);
  }

  TEST_CASE("single-arm study has no comparisons and bounded MAE") {
    StudyConfig cfg;
    cfg.arms = {"CLCC"};
    cfg.subjects = 2;
    cfg.training_trials = 1;
    cfg.testing_trials = 2;
    cfg.trial_duration_s = 1.0;
    const auto report = run_study(cfg);
    CHECK(report.arms.size() == 1);
    CHECK(report.comparisons.empty());
    for (const auto& t : report.arms[0].trials) {
      CHECK(t.mae >= 0.0);
      CHECK(t.mae <= 100.0);
    }
  }

  TEST_CASE("study rejects bad arms") {
    StudyConfig cfg;
    cfg.arms = {"CLCC", "nope"};
    CHECK_THROWS_AS(run_study(cfg), Error);
  }

  TEST_CASE("study comparisons cover continuous arms with correction") {
    StudyConfig cfg;
    cfg.arms = {"OLDC", "OLCC", "CLCC"};
    cfg.subjects = 3;
    cfg.training_trials = 0;
    cfg.testing_trials = 1;
    cfg.trial_duration_s = 1.0;
    cfg.position_rounds = {{Dof::kII}};
    cfg.force_rounds = {{Dof::kI}};
    cfg.bonferroni = 3.0;
    const auto report = run_study(cfg);
    CHECK(report.arms.size() == 3);
    REQUIRE_FALSE(report.comparisons.empty());
    for (const auto& c : report.comparisons) {
      CHECK(c.a != "OLDC");
      CHECK(c.b != "OLDC");
      CHECK(c.p_corrected == doctest::Approx(std::min(1.0, 3.0 * c.test.p)));
    }
  }
}
