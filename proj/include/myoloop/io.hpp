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

// JSON documents (references, configs, reports), JSON-lines telemetry and
// CSV window logs.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "myoloop/harness.hpp"
#include "myoloop/session_config.hpp"

namespace myoloop {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const ReferenceActivity& ref);
ReferenceActivity reference_from_json(const Json& j);
Json to_json(const ReferenceSet& refs);
ReferenceSet reference_set_from_json(const Json& j);

Json to_json(const ControllerConfig& cfg);
ControllerConfig controller_config_from_json(const Json& j, ControllerConfig base = {});
Json to_json(const PlantConfig& cfg);
PlantConfig plant_config_from_json(const Json& j, PlantConfig base = {});
Json to_json(const MusclePattern& pattern);
MusclePattern muscle_pattern_from_json(const Json& j);
Json to_json(const SessionConfig& cfg);
SessionConfig session_config_from_json(const Json& j, SessionConfig base = {});
Json to_json(const UserModel& user);
UserModel user_model_from_json(const Json& j, UserModel base = {});
Json to_json(const VirtualObject& obj);
VirtualObject virtual_object_from_json(const Json& j, VirtualObject base = {});
Json to_json(const StudyConfig& cfg);
StudyConfig study_config_from_json(const Json& j, StudyConfig base = {});

Json to_json(const FeedbackFrame& frame);
FeedbackFrame feedback_frame_from_json(const Json& j);

/// One session-log record ("v":1) per control step.
Json telemetry_record(const TraceStep& step, ControlMode mode);
TraceStep trace_step_from_json(const Json& j);

Json to_json(const StudyReport& report);
/// Per arm and category: n, median, quartiles of per-subject testing MAE.
void write_summary_csv(std::ostream& out, const StudyReport& report);

/// Rows of t, ch0..ch7; t advances by `sample_period_ms` per row.
void write_window_csv(std::ostream& out, const EmgWindow& window, double sample_period_ms,
                      bool header = true);
EmgWindow read_window_csv(std::istream& in);

Json load_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace myoloop
