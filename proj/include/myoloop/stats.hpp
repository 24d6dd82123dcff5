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

#include <span>
#include <vector>

namespace myoloop {

struct MannWhitneyResult {
  double u = 0.0;  // U of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Midranks of the pooled sample, first `a` then `b`.
std::vector<double> midranks(std::span<const double> a, std::span<const double> b);

/// Enumerates every split of the pooled midranks.
MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b);

/// Normal approximation with tie and continuity correction.
MannWhitneyResult mann_whitney_normal(std::span<const double> a, std::span<const double> b);

/// Exact for n_a + n_b <= 12, normal approximation otherwise.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace myoloop
