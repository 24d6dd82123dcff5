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

// Python bindings. Structured values cross the boundary as plain dicts and
// lists, using the same JSON shapes as the CLI files.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "myoloop/error.hpp"
#include "myoloop/haptics.hpp"
#include "myoloop/io.hpp"
#include "myoloop/service.hpp"
#include "myoloop/stats.hpp"
#include "myoloop/transport.hpp"

namespace py = pybind11;
using namespace myoloop;

namespace {

Json to_json_value(const py::object& obj) {
  if (obj.is_none()) return Json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return Json::parse(text);
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

SessionConfig session_from(const py::object& session) {
  SessionConfig s = session_config_from_json(to_json_value(session));
  validate(s);
  return s;
}

py::dict mw_dict(const MannWhitneyResult& r) {
  py::dict d;
  d["u"] = r.u;
  d["p"] = r.p;
  d["exact"] = r.exact;
  return d;
}

py::object calibrate(const py::object& session, std::uint64_t seed) {
  const SessionConfig s = session_from(session);
  return to_py(to_json(calibrate_references(s, seed)));
}

py::object trial(const py::object& refs_obj, const std::string& kind, const std::vector<std::string>& dofs,
                 const std::vector<double>& target, const std::string& loop, const std::string& mode,
                 bool training, double duration_s, std::uint64_t seed, const py::object& session) {
  SessionConfig s = session_from(session);
  s.controller.mode = control_mode_from_string(mode);
  const ReferenceSet refs = reference_set_from_json(to_json_value(refs_obj));

  TaskSpec spec;
  spec.kind = task_kind_from_string(kind);
  spec.dofs.clear();
  for (const auto& d : dofs) spec.dofs.push_back(dof_from_string(d));
  spec.trials = 1;
  spec.duration_s = duration_s;
  spec.training = training;
  validate(spec);
  if (target.size() != spec.dofs.size()) throw Error(Errc::kConfigError, "target needs one value per DOF");

  UserModel user;
  if (loop == "closed") user.kind = FeedbackLoop::kClosed;
  else if (loop == "open") user.kind = FeedbackLoop::kOpen;
  else throw Error(Errc::kConfigError, "unknown loop '" + loop + "'");

  TrialTrace trace;
  {
    py::gil_scoped_release release;
    TrialContext ctx{s, refs, default_force_object()};
    trace = run_trial(spec, target, ctx, user, seed);
  }
  Json steps = Json::array();
  for (const auto& step : trace.steps) steps.push_back(telemetry_record(step, trace.mode));
  return to_py(Json{{"mae", trace.mae}, {"mae_per_dof", trace.mae_per_dof}, {"steps", steps}});
}

py::object study(const py::object& config, std::optional<std::uint64_t> seed) {
  StudyConfig cfg = study_config_from_json(to_json_value(config));
  if (seed) cfg.seed = *seed;
  validate(cfg);
  StudyReport report;
  {
    py::gil_scoped_release release;
    report = run_study(cfg);
  }
  return to_py(to_json(report));
}

// Drives the streaming engine without a socket: each call takes or returns
// protocol messages as dicts.
class Session {
 public:
  Session(const py::object& refs, const py::object& session)
      : engine_(session_from(session), reference_set_from_json(to_json_value(refs))) {}

  py::object send(const py::object& msg) {
    const std::string text = py::isinstance<py::str>(msg) ? msg.cast<std::string>() : to_json_value(msg).dump();
    return to_py(Json(engine_.handle_message(text)));
  }

  py::object step() { return to_py(Json(engine_.step())); }
  double now_ms() const { return engine_.now_ms(); }

 private:
  SessionEngine engine_;
};

}  // namespace

PYBIND11_MODULE(_myoloop, m) {
  m.doc() = "myoloop native core";
  static py::exception<Error> error(m, "MyoloopError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("w1", [](const std::vector<double>& a, const std::vector<double>& b) { return w1_1d(a, b); },
        py::arg("a"), py::arg("b"), "1-Wasserstein distance between two sorted samples.");
  m.def("mann_whitney_u",
        [](const std::vector<double>& a, const std::vector<double>& b) { return mw_dict(mann_whitney_u(a, b)); },
        py::arg("a"), py::arg("b"));
  m.def("mann_whitney_exact",
        [](const std::vector<double>& a, const std::vector<double>& b) { return mw_dict(mann_whitney_exact(a, b)); },
        py::arg("a"), py::arg("b"));
  m.def("mann_whitney_normal",
        [](const std::vector<double>& a, const std::vector<double>& b) { return mw_dict(mann_whitney_normal(a, b)); },
        py::arg("a"), py::arg("b"));
  m.def("vibration_profile",
        [](double wrist, double sigma) {
          const auto v = vibration_profile(wrist, sigma);
          return std::vector<double>(v.begin(), v.end());
        },
        py::arg("wrist"), py::arg("sigma") = kVibrationSigma);
  m.def("calibrate", &calibrate, py::arg("session") = py::none(), py::arg("seed") = 0);
  m.def("run_trial", &trial, py::arg("refs"), py::arg("kind") = "position",
        py::arg("dofs") = std::vector<std::string>{"II"}, py::arg("target") = std::vector<double>{0.5},
        py::arg("loop") = "closed", py::arg("mode") = "continuous", py::arg("training") = false,
        py::arg("duration_s") = 5.0, py::arg("seed") = 0, py::arg("session") = py::none());
  m.def("run_study", &study, py::arg("config") = py::none(), py::arg("seed") = py::none());

  py::class_<Session>(m, "Session")
      .def(py::init<const py::object&, const py::object&>(), py::arg("refs"), py::arg("session") = py::none())
      .def("send", &Session::send, py::arg("message"))
      .def("step", &Session::step)
      .def_property_readonly("now_ms", &Session::now_ms);
}
