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

#include "myoloop/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "myoloop/error.hpp"

namespace myoloop {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(Errc::kConfigError, std::string(what) + ": " + e.what());
  }
}

template <std::size_t N>
std::array<double, N> fixed_array(const Json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != N)
    throw Error(Errc::kConfigError, std::string(key) + " must have " + std::to_string(N) + " entries");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

Json dofs_json(const std::vector<Dof>& dofs) {
  Json j = Json::array();
  for (Dof d : dofs) j.push_back(std::string(to_string(d)));
  return j;
}

std::vector<Dof> dofs_from_json(const Json& j) {
  std::vector<Dof> out;
  for (const auto& d : j) out.push_back(dof_from_string(d.get<std::string>()));
  return out;
}

}  // namespace

Json to_json(const ReferenceActivity& ref) {
  Json j;
  j["id"] = ref.id;
  j["dof"] = std::string(to_string(ref.dof));
  j["antagonist_group"] = ref.antagonist_group ? Json(*ref.antagonist_group) : Json(nullptr);
  j["target_pose"] = ref.target_pose;
  Json bank = Json::array();
  for (const auto& c : ref.bank.ch) bank.push_back(c);
  j["bank"] = std::move(bank);
  j["bandwidth"] = ref.kde.bandwidth;
  return j;
}

ReferenceActivity reference_from_json(const Json& j) {
  return guarded("reference", [&] {
    ReferenceActivity ref;
    ref.id = j.at("id").get<std::string>();
    ref.dof = dof_from_string(j.at("dof").get<std::string>());
    if (j.contains("antagonist_group") && !j["antagonist_group"].is_null())
      ref.antagonist_group = j["antagonist_group"].get<int>();
    ref.target_pose = fixed_array<kMotors>(j, "target_pose");
    const auto& bank = j.at("bank");
    if (bank.size() != kChannels) throw Error(Errc::kConfigError, "bank must have 8 channels");
    for (std::size_t c = 0; c < kChannels; ++c) {
      ref.bank.ch[c] = bank[c].get<std::vector<double>>();
      if (!std::is_sorted(ref.bank.ch[c].begin(), ref.bank.ch[c].end()))
        throw Error(Errc::kConfigError, "bank channels must be sorted");
      for (double x : ref.bank.ch[c])
        if (!(x >= 0.0)) throw Error(Errc::kConfigError, "bank values must be >= 0");
    }
    ref.kde.bandwidth = fixed_array<kChannels>(j, "bandwidth");
    for (double h : ref.kde.bandwidth)
      if (!(h > 0.0)) throw Error(Errc::kConfigError, "bandwidth must be > 0");
    return ref;
  });
}

Json to_json(const ReferenceSet& refs) {
  Json j;
  j["v"] = kSchemaVersion;
  j["threshold"] = refs.threshold() ? Json(*refs.threshold()) : Json(nullptr);
  j["weight_floor"] = refs.weight_floor();
  j["weight_ceiling"] = refs.weight_ceiling();
  Json arr = Json::array();
  for (const auto& r : refs.refs()) arr.push_back(to_json(r));
  j["references"] = std::move(arr);
  return j;
}

ReferenceSet reference_set_from_json(const Json& j) {
  return guarded("reference set", [&] {
    std::vector<ReferenceActivity> refs;
    for (const auto& r : j.at("references")) refs.push_back(reference_from_json(r));
    std::optional<double> threshold;
    if (j.contains("threshold") && !j["threshold"].is_null()) threshold = j["threshold"].get<double>();
    ReferenceSet set(std::move(refs), threshold);
    if (j.contains("weight_floor") || j.contains("weight_ceiling")) {
      auto floor = j.value("weight_floor", std::vector<double>(set.rank(), 0.0));
      auto ceiling = j.value("weight_ceiling", std::vector<double>(set.rank(), 1.0));
      set.set_weight_range(std::move(floor), std::move(ceiling));
    }
    return set;
  });
}

Json to_json(const ControllerConfig& cfg) {
  return Json{{"alpha", cfg.alpha},
              {"steps", cfg.steps},
              {"lr", cfg.lr},
              {"h", cfg.h},
              {"threshold", cfg.threshold ? Json(*cfg.threshold) : Json(nullptr)},
              {"mode", std::string(to_string(cfg.mode))},
              {"feedback_enabled", cfg.feedback_enabled}};
}

ControllerConfig controller_config_from_json(const Json& j, ControllerConfig cfg) {
  return guarded("controller config", [&] {
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.h = j.value("h", cfg.h);
    if (j.contains("threshold"))
      cfg.threshold = j["threshold"].is_null() ? std::nullopt
                                               : std::optional<double>(j["threshold"].get<double>());
    if (j.contains("mode")) cfg.mode = control_mode_from_string(j["mode"].get<std::string>());
    cfg.feedback_enabled = j.value("feedback_enabled", cfg.feedback_enabled);
    validate(cfg);
    return cfg;
  });
}

Json to_json(const PlantConfig& cfg) {
  return Json{{"rate", cfg.rate}, {"tau_spring", cfg.tau_spring}, {"dt_ms", cfg.dt_ms}};
}

PlantConfig plant_config_from_json(const Json& j, PlantConfig cfg) {
  return guarded("plant config", [&] {
    cfg.rate = j.value("rate", cfg.rate);
    cfg.tau_spring = j.value("tau_spring", cfg.tau_spring);
    cfg.dt_ms = j.value("dt_ms", cfg.dt_ms);
    validate(cfg);
    return cfg;
  });
}

Json to_json(const MusclePattern& pattern) {
  return Json{{"base", pattern.base}, {"gains", pattern.gains}};
}

MusclePattern muscle_pattern_from_json(const Json& j) {
  return guarded("muscle pattern", [&] {
    MusclePattern p;
    p.base = j.value("base", kDefaultBase);
    for (const auto& row : j.at("gains")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != kChannels) throw Error(Errc::kConfigError, "gain rows need 8 entries");
      std::array<double, kChannels> a{};
      std::copy(v.begin(), v.end(), a.begin());
      p.gains.push_back(a);
    }
    validate(p);
    return p;
  });
}

Json to_json(const SessionConfig& cfg) {
  return Json{{"control_rate", cfg.control_rate},
              {"emg_rate", cfg.emg_rate},
              {"window_ms", cfg.window_ms},
              {"controller", to_json(cfg.controller)},
              {"plant", to_json(cfg.plant)},
              {"pattern", to_json(cfg.pattern)},
              {"seed", cfg.seed},
              {"calibration_windows", cfg.calibration_windows},
              {"bank_size", cfg.bank_size}};
}

SessionConfig session_config_from_json(const Json& j, SessionConfig cfg) {
  return guarded("session config", [&] {
    cfg.control_rate = j.value("control_rate", cfg.control_rate);
    cfg.emg_rate = j.value("emg_rate", cfg.emg_rate);
    cfg.window_ms = j.value("window_ms", cfg.window_ms);
    if (j.contains("controller")) cfg.controller = controller_config_from_json(j["controller"], cfg.controller);
    if (j.contains("plant")) cfg.plant = plant_config_from_json(j["plant"], cfg.plant);
    if (j.contains("pattern")) cfg.pattern = muscle_pattern_from_json(j["pattern"]);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.calibration_windows = j.value("calibration_windows", cfg.calibration_windows);
    cfg.bank_size = j.value("bank_size", cfg.bank_size);
    validate(cfg);
    return cfg;
  });
}

Json to_json(const UserModel& user) {
  return Json{{"kind", user.kind == FeedbackLoop::kClosed ? "closed" : "open"},
              {"gain", user.gain},
              {"resolution", user.resolution},
              {"noise", user.noise},
              {"drift", user.drift}};
}

UserModel user_model_from_json(const Json& j, UserModel user) {
  return guarded("user model", [&] {
    if (j.contains("kind")) {
      const auto k = j["kind"].get<std::string>();
      if (k == "closed") user.kind = FeedbackLoop::kClosed;
      else if (k == "open") user.kind = FeedbackLoop::kOpen;
      else throw Error(Errc::kConfigError, "user kind must be 'closed' or 'open'");
    }
    user.gain = j.value("gain", user.gain);
    user.resolution = j.value("resolution", user.resolution);
    user.noise = j.value("noise", user.noise);
    user.drift = j.value("drift", user.drift);
    validate(user);
    return user;
  });
}

Json to_json(const VirtualObject& obj) {
  return Json{{"closure", obj.closure}, {"stiffness", obj.stiffness}, {"present", obj.present}};
}

VirtualObject virtual_object_from_json(const Json& j, VirtualObject obj) {
  return guarded("virtual object", [&] {
    if (j.contains("closure")) {
      if (j["closure"].is_number()) obj.closure.fill(j["closure"].get<double>());
      else obj.closure = fixed_array<kFingers>(j, "closure");
    }
    obj.stiffness = j.value("stiffness", obj.stiffness);
    obj.present = j.value("present", obj.present);
    validate(obj);
    return obj;
  });
}

Json to_json(const StudyConfig& cfg) {
  Json pos = Json::array(), force = Json::array();
  for (const auto& r : cfg.position_rounds) pos.push_back(dofs_json(r));
  for (const auto& r : cfg.force_rounds) force.push_back(dofs_json(r));
  return Json{{"arms", cfg.arms},
              {"subjects", cfg.subjects},
              {"seed", cfg.seed},
              {"training_trials", cfg.training_trials},
              {"testing_trials", cfg.testing_trials},
              {"trial_duration_s", cfg.trial_duration_s},
              {"position_rounds", pos},
              {"force_rounds", force},
              {"bonferroni", cfg.bonferroni},
              {"user", to_json(cfg.user)},
              {"force_object", to_json(cfg.force_object)},
              {"session", to_json(cfg.session)}};
}

StudyConfig study_config_from_json(const Json& j, StudyConfig cfg) {
  return guarded("study config", [&] {
    if (j.contains("arms")) cfg.arms = j["arms"].get<std::vector<std::string>>();
    cfg.subjects = j.value("subjects", cfg.subjects);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.training_trials = j.value("training_trials", cfg.training_trials);
    cfg.testing_trials = j.value("testing_trials", cfg.testing_trials);
    cfg.trial_duration_s = j.value("trial_duration_s", cfg.trial_duration_s);
    if (j.contains("position_rounds")) {
      cfg.position_rounds.clear();
      for (const auto& r : j["position_rounds"]) cfg.position_rounds.push_back(dofs_from_json(r));
    }
    if (j.contains("force_rounds")) {
      cfg.force_rounds.clear();
      for (const auto& r : j["force_rounds"]) cfg.force_rounds.push_back(dofs_from_json(r));
    }
    cfg.bonferroni = j.value("bonferroni", cfg.bonferroni);
    if (j.contains("user")) cfg.user = user_model_from_json(j["user"], cfg.user);
    if (j.contains("force_object"))
      cfg.force_object = virtual_object_from_json(j["force_object"], cfg.force_object);
    if (j.contains("session")) cfg.session = session_config_from_json(j["session"], cfg.session);
    validate(cfg);
    return cfg;
  });
}

Json to_json(const FeedbackFrame& frame) {
  return Json{{"tangential", frame.tangential}, {"normal", frame.normal}, {"vibration", frame.vibration}};
}

FeedbackFrame feedback_frame_from_json(const Json& j) {
  return guarded("feedback frame", [&] {
    FeedbackFrame f;
    f.tangential = fixed_array<kModules>(j, "tangential");
    f.normal = fixed_array<kModules>(j, "normal");
    f.vibration = fixed_array<kModules>(j, "vibration");
    return f;
  });
}

Json telemetry_record(const TraceStep& step, ControlMode mode) {
  return Json{{"v", kSchemaVersion},
              {"t", step.t_ms},
              {"mode", std::string(to_string(mode))},
              {"activation", step.activation},
              {"weights", step.weights},
              {"distance", step.distance},
              {"pose", step.command},
              {"motors", step.hand.pos},
              {"torques", step.hand.torque},
              {"contact", step.hand.contact},
              {"feedback", to_json(step.feedback)}};
}

TraceStep trace_step_from_json(const Json& j) {
  return guarded("telemetry record", [&] {
    if (j.value("v", 0) != kSchemaVersion)
      throw Error(Errc::kConfigError, "unsupported telemetry schema version");
    TraceStep s;
    s.t_ms = j.at("t").get<double>();
    s.activation = j.at("activation").get<std::vector<double>>();
    s.weights = j.at("weights").get<std::vector<double>>();
    s.distance = j.at("distance").get<double>();
    s.command = fixed_array<kMotors>(j, "pose");
    s.hand.pos = fixed_array<kMotors>(j, "motors");
    s.hand.torque = fixed_array<kMotors>(j, "torques");
    const auto contact = j.at("contact").get<std::vector<bool>>();
    for (std::size_t f = 0; f < kFingers && f < contact.size(); ++f) s.hand.contact[f] = contact[f];
    s.hand.t_ms = s.t_ms;
    s.feedback = feedback_frame_from_json(j.at("feedback"));
    s.feedback.t_ms = s.t_ms;
    return s;
  });
}

namespace {

Json summary_json(const std::vector<double>& v) {
  if (v.empty()) return Json{{"n", 0}};
  return Json{{"n", v.size()}, {"median", median(v)}, {"q1", quantile(v, 0.25)}, {"q3", quantile(v, 0.75)}};
}

}  // namespace

Json to_json(const StudyReport& report) {
  Json arms = Json::array();
  for (const auto& a : report.arms) {
    Json subjects = Json::object(), summary = Json::object();
    for (auto cat : kCategories) {
      const std::string key(cat);
      Json entry = Json::object();
      if (auto it = a.subject_testing.find(key); it != a.subject_testing.end()) {
        entry["testing"] = it->second;
        summary[key] = summary_json(it->second);
      }
      if (auto it = a.subject_training.find(key); it != a.subject_training.end())
        entry["training"] = it->second;
      if (!entry.empty()) subjects[key] = std::move(entry);
    }
    Json trials = Json::array();
    for (const auto& t : a.trials) {
      trials.push_back(Json{{"subject", t.subject},
                            {"round", t.round},
                            {"trial", t.trial},
                            {"category", t.category},
                            {"kind", std::string(to_string(t.kind))},
                            {"dofs", dofs_json(t.dofs)},
                            {"training", t.training},
                            {"target", t.target},
                            {"mae", t.mae}});
    }
    arms.push_back(Json{{"name", a.arm.name},
                        {"mode", std::string(to_string(a.arm.mode))},
                        {"feedback", a.arm.loop == FeedbackLoop::kClosed},
                        {"reported_in_comparisons", a.arm.mode == ControlMode::kContinuous},
                        {"summary", std::move(summary)},
                        {"subjects", std::move(subjects)},
                        {"trials", std::move(trials)}});
  }
  Json comparisons = Json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back(Json{{"a", c.a},
                               {"b", c.b},
                               {"category", c.category},
                               {"U", c.test.u},
                               {"p", c.test.p},
                               {"exact", c.test.exact},
                               {"p_corrected", c.p_corrected},
                               {"median_a", c.median_a},
                               {"median_b", c.median_b}});
  }
  return Json{{"v", kSchemaVersion},
              {"config", to_json(report.config)},
              {"arms", std::move(arms)},
              {"comparisons", std::move(comparisons)}};
}

void write_summary_csv(std::ostream& out, const StudyReport& report) {
  out << "arm,category,phase,n,median,q1,q3\n";
  char buf[256];
  for (const auto& a : report.arms) {
    for (int phase = 0; phase < 2; ++phase) {
      const auto& table = phase == 0 ? a.subject_testing : a.subject_training;
      for (auto cat : kCategories) {
        auto it = table.find(std::string(cat));
        if (it == table.end() || it->second.empty()) continue;
        const auto& v = it->second;
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%.6f,%.6f,%.6f\n", a.arm.name.c_str(),
                      std::string(cat).c_str(), phase == 0 ? "testing" : "training", v.size(),
                      median(v), quantile(v, 0.25), quantile(v, 0.75));
        out << buf;
      }
    }
  }
}

void write_window_csv(std::ostream& out, const EmgWindow& window, double sample_period_ms,
                      bool header) {
  if (header) {
    out << "t";
    for (std::size_t c = 0; c < kChannels; ++c) out << ",ch" << c;
    out << '\n';
  }
  char buf[32];
  for (std::size_t k = 0; k < window.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", window.t_ms + static_cast<double>(k) * sample_period_ms);
    out << buf;
    for (std::size_t c = 0; c < kChannels; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", window.samples[c][k]);
      out << buf;
    }
    out << '\n';
  }
}

EmgWindow read_window_csv(std::istream& in) {
  EmgWindow w;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == 't') continue;  // header
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc()) throw Error(Errc::kInvalidSignal, "bad CSV cell '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != kChannels + 1)
      throw Error(Errc::kDimError, "CSV rows need t plus 8 channels");
    if (first) w.t_ms = row[0];
    first = false;
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (!(row[c + 1] >= 0.0)) throw Error(Errc::kInvalidSignal, "window samples must be rectified");
      w.samples[c].push_back(row[c + 1]);
    }
  }
  return w;
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfigError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::kConfigError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace myoloop
