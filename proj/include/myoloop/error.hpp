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

#include <stdexcept>
#include <string>

namespace myoloop {

enum class Errc {
  kInvalidSignal,
  kTooFewSamples,
  kInsufficientCalibration,
  kEmptySample,
  kDimError,
  kConfigError,
  kNotCalibrated,
};

const char* to_string(Errc code) noexcept;

/// All engine failures surface as this exception; `code()` identifies the
/// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace myoloop
