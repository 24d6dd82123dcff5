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

// myoloop command line: calibration, single trials, study batteries, trace
// replay and the streaming endpoint.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "myoloop/error.hpp"
#include "myoloop/io.hpp"
#include "myoloop/service.hpp"

using namespace myoloop;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
};

void add_common(CLI::App* app, Common& c, const std::string& out_default) {
  app->add_option("--seed", c.seed, "RNG seed")->each([&c](const std::string&) { c.seed_set = true; });
  app->add_option("--config", c.config, "config JSON");
  app->add_option("--out", c.out, "output path")->default_val(out_default);
}

SessionConfig load_session(const Common& c) {
  SessionConfig s;
  if (!c.config.empty()) {
    const Json j = load_json_file(c.config);
    // A study config carries the session under "session".
    s = session_config_from_json(j.contains("session") ? j.at("session") : j);
  }
  if (c.seed_set) s.seed = c.seed;
  validate(s);
  return s;
}

ReferenceSet load_or_calibrate(const std::string& refs_path, const SessionConfig& s) {
  if (!refs_path.empty()) return reference_set_from_json(load_json_file(refs_path));
  return calibrate_references(s, s.seed);
}

Json trace_header(const SessionConfig& s, const TrialTrace& trace, std::uint64_t seed) {
  Json target = trace.target;
  std::vector<std::string> dofs;
  for (Dof d : trace.spec.dofs) dofs.emplace_back(to_string(d));
  return Json{{"v", kSchemaVersion},
              {"header",
               {{"kind", std::string(to_string(trace.spec.kind))},
                {"dofs", dofs},
                {"target", target},
                {"mode", std::string(to_string(trace.mode))},
                {"loop", trace.loop == FeedbackLoop::kClosed ? "closed" : "open"},
                {"training", trace.spec.training},
                {"seed", seed},
                {"mae", trace.mae},
                {"session", to_json(s)}}}};
}

void write_trace(std::ostream& out, const SessionConfig& s, const TrialTrace& trace,
                 std::uint64_t seed, const Json& extra = Json::object()) {
  Json header = trace_header(s, trace, seed);
  for (auto& [k, v] : extra.items()) header["header"][k] = v;
  out << header.dump() << '\n';
  for (const auto& step : trace.steps) out << telemetry_record(step, trace.mode).dump() << '\n';
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const Common& c) {
  const SessionConfig s = load_session(c);
  const ReferenceSet refs = calibrate_references(s, s.seed);
  write_text_file(c.out, to_json(refs).dump(2) + "\n");
  std::cerr << "wrote " << refs.refs().size() << " references to " << c.out;
  if (refs.threshold()) std::cerr << " (threshold " << *refs.threshold() << ")";
  std::cerr << "\n";
  return kExitOk;
}

struct TrialOpts {
  std::string refs;
  std::string mode = "continuous";
  std::string kind = "position";
  std::string loop = "closed";
  std::vector<std::string> dofs;
  std::vector<double> target;
  double duration = 5.0;
  bool training = false;
};

int cmd_trial(const Common& c, const TrialOpts& o) {
  SessionConfig s = load_session(c);
  s.controller.mode = control_mode_from_string(o.mode);
  const ReferenceSet refs = load_or_calibrate(o.refs, s);

  TaskSpec spec;
  spec.kind = task_kind_from_string(o.kind);
  spec.dofs.clear();
  for (const auto& d : o.dofs.empty() ? std::vector<std::string>{"II"} : o.dofs)
    spec.dofs.push_back(dof_from_string(d));
  spec.trials = 1;
  spec.duration_s = o.duration;
  spec.training = o.training;
  validate(spec);

  UserModel user;
  if (o.loop == "closed") user.kind = FeedbackLoop::kClosed;
  else if (o.loop == "open") user.kind = FeedbackLoop::kOpen;
  else throw Error(Errc::kConfigError, "unknown loop '" + o.loop + "'");

  Target target = o.target;
  if (target.empty()) {
    Rng rng(mix_seed(s.seed, 4));
    target = gen_targets(spec, rng).front();
  }
  if (target.size() != spec.dofs.size())
    throw Error(Errc::kConfigError, "--target needs one value per --dof");

  TrialContext ctx{s, refs, default_force_object()};
  const TrialTrace trace = run_trial(spec, target, ctx, user, s.seed);

  std::ostringstream buf;
  write_trace(buf, s, trace, s.seed);
  write_text_file(c.out, buf.str());
  std::cout << "mae " << trace.mae << "\n";
  return kExitOk;
}

struct StudyOpts {
  bool traces = false;
  long subjects = -1;
  long training_trials = -1;
  long testing_trials = -1;
  std::vector<std::string> arms;
};

int cmd_study(const Common& c, const StudyOpts& o) {
  StudyConfig cfg;
  if (!c.config.empty()) cfg = study_config_from_json(load_json_file(c.config));
  if (c.seed_set) cfg.seed = c.seed;
  if (o.subjects >= 0) cfg.subjects = static_cast<std::size_t>(o.subjects);
  if (o.training_trials >= 0) cfg.training_trials = static_cast<std::size_t>(o.training_trials);
  if (o.testing_trials >= 0) cfg.testing_trials = static_cast<std::size_t>(o.testing_trials);
  if (!o.arms.empty()) cfg.arms = o.arms;
  validate(cfg);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::ofstream traces;
  TraceSink sink;
  if (o.traces) {
    traces.open(dir / "traces.jsonl", std::ios::binary);
    if (!traces) throw std::runtime_error("cannot write traces.jsonl");
    sink = [&](const Arm& arm, const TrialScore& score, const TrialTrace& trace) {
      const Json extra{{"arm", arm.name},      {"subject", score.subject},
                       {"round", score.round}, {"trial", score.trial},
                       {"category", score.category}};
      write_trace(traces, cfg.session, trace, cfg.seed, extra);
    };
  }
  const StudyReport report = run_study(cfg, sink);
  write_text_file(dir / "report.json", to_json(report).dump(2) + "\n");
  std::ostringstream csv;
  write_summary_csv(csv, report);
  write_text_file(dir / "summary.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int cmd_replay(const Common& c, const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw Error(Errc::kConfigError, "cannot open " + trace_path);
  SessionConfig s = load_session(c);
  std::ofstream out;
  if (!c.out.empty()) {
    out.open(c.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + c.out);
  }
  std::size_t steps = 0, mismatches = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(Errc::kConfigError, trace_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("header")) {
      if (j["header"].contains("session")) s = session_config_from_json(j["header"]["session"]);
      continue;
    }
    const TraceStep step = trace_step_from_json(j);
    const FeedbackFrame frame = render(step.hand, s.plant);
    ++steps;
    if (!(frame == step.feedback)) {
      ++mismatches;
      std::cerr << "line " << line_no << ": feedback differs at t=" << step.t_ms << "\n";
    }
    if (out.is_open()) {
      Json rec = to_json(frame);
      rec["t"] = step.t_ms;
      out << rec.dump() << '\n';
    }
  }
  std::cout << "replayed " << steps << " steps, " << mismatches << " mismatches\n";
  return mismatches == 0 ? kExitOk : kExitRuntime;
}

struct ServeOpts {
  std::string refs;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  double duration = 0.0;
};

int cmd_serve(const Common& c, const ServeOpts& o) {
  const SessionConfig s = load_session(c);
  const ReferenceSet refs = load_or_calibrate(o.refs, s);
  StreamServer server(s, refs);
  server.start(o.port, o.host);
  std::cerr << "listening on ws://" << o.host << ":" << server.port() << "/\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (o.duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= o.duration)
      break;
  }
  server.stop();
  std::cerr << "sent " << server.frames_sent() << " frames\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"myoloop: myoelectric control and haptic feedback simulator"};
  app.require_subcommand(1);

  Common common;
  auto* calibrate = app.add_subcommand("calibrate", "synthesize and calibrate reference activities");
  add_common(calibrate, common, "refs.json");

  TrialOpts trial_opts;
  auto* trial = app.add_subcommand("trial", "run one matching trial with the simulated user");
  add_common(trial, common, "trace.jsonl");
  trial->add_option("--refs", trial_opts.refs, "reference JSON from calibrate");
  trial->add_option("--mode", trial_opts.mode, "continuous or discrete")->check(CLI::IsMember({"continuous", "discrete"}));
  trial->add_option("--kind", trial_opts.kind, "position or force")->check(CLI::IsMember({"position", "force"}));
  trial->add_option("--loop", trial_opts.loop, "closed or open")->check(CLI::IsMember({"closed", "open"}));
  trial->add_option("--dof", trial_opts.dofs, "I, II or III (repeatable)");
  trial->add_option("--target", trial_opts.target, "target per DOF in [0, 1]");
  trial->add_option("--duration", trial_opts.duration, "trial length in seconds");
  trial->add_flag("--training", trial_opts.training, "percept is the true motor state");

  StudyOpts study_opts;
  auto* study = app.add_subcommand("study", "run the full task battery for each arm");
  add_common(study, common, "study_out");
  study->add_flag("--traces", study_opts.traces, "also write traces.jsonl");
  study->add_option("--subjects", study_opts.subjects, "override subjects per arm");
  study->add_option("--training-trials", study_opts.training_trials, "override training trials");
  study->add_option("--testing-trials", study_opts.testing_trials, "override testing trials");
  study->add_option("--arm", study_opts.arms, "override arms (repeatable)");

  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "re-render feedback from a trace log and compare");
  add_common(replay, common, "");
  replay->add_option("trace", trace_path, "trace JSON-lines file")->required();

  ServeOpts serve_opts;
  auto* serve = app.add_subcommand("serve", "start the streaming endpoint");
  add_common(serve, common, "");
  serve->add_option("--refs", serve_opts.refs, "reference JSON from calibrate");
  serve->add_option("--host", serve_opts.host, "listen address");
  serve->add_option("--port", serve_opts.port, "listen port, 0 picks one");
  serve->add_option("--duration", serve_opts.duration, "stop after this many seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (calibrate->parsed()) return cmd_calibrate(common);
    if (trial->parsed()) return cmd_trial(common, trial_opts);
    if (study->parsed()) return cmd_study(common, study_opts);
    if (replay->parsed()) return cmd_replay(common, trace_path);
    if (serve->parsed()) return cmd_serve(common, serve_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::kConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
