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

// Shared builders for unit tests.

#include <map>
#include <vector>

#include "myoloop/control.hpp"
#include "myoloop/session_config.hpp"
#include "myoloop/signal.hpp"
#include "myoloop/transport.hpp"

namespace myoloop::testing {

inline std::vector<EmgWindow> synth_windows(const std::vector<double>& a, std::size_t count,
                                             std::size_t n, Rng& rng,
                                             const MusclePattern& pat = default_pattern()) {
  std::vector<EmgWindow> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(synth_window(a, pat, n, rng));
  return out;
}

inline ChannelSamples constant_samples(double v, std::size_t n) {
  ChannelSamples s;
  for (auto& ch : s.ch) ch.assign(n, v);
  return s;
}

inline ChannelSamples scaled(const ChannelSamples& s, double k) {
  ChannelSamples out = s;
  for (auto& ch : out.ch)
    for (auto& x : ch) x *= k;
  return out;
}

/// The default session references (REST, I, II, III), cached per seed.
inline const ReferenceSet& default_refs(std::uint64_t seed = 0) {
  static std::map<std::uint64_t, ReferenceSet> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) it = cache.emplace(seed, calibrate_references(SessionConfig{}, seed)).first;
  return it->second;
}

}  // namespace myoloop::testing
