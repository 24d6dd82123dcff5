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

#include "myoloop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "myoloop/error.hpp"

namespace myoloop {

std::vector<double> midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> rank(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  return rank;
}

namespace {

void check_nonempty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::kEmptySample, "Mann-Whitney needs two samples");
}

double u_statistic(std::span<const double> ranks, std::size_t na) {
  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += ranks[i];
  return ra - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
}

}  // namespace

MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
  check_nonempty(a, b);
  const std::size_t na = a.size();
  const std::size_t n = na + b.size();
  if (n > 24) throw Error(Errc::kDimError, "exact enumeration limited to 24 observations");
  const auto ranks = midranks(a, b);
  MannWhitneyResult res;
  res.exact = true;
  res.u = u_statistic(ranks, na);
  const double mu = 0.5 * static_cast<double>(na) * static_cast<double>(b.size());
  const double observed = std::abs(res.u - mu) - 1e-9;

  // Walk every na-subset of the pooled ranks in lexicographic order.
  std::vector<std::size_t> idx(na);
  std::iota(idx.begin(), idx.end(), 0);
  const double offset = 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
  std::uint64_t total = 0, extreme = 0;
  while (true) {
    double ra = 0.0;
    for (std::size_t i : idx) ra += ranks[i];
    ++total;
    if (std::abs(ra - offset - mu) >= observed) ++extreme;
    std::size_t k = na;
    while (k > 0 && idx[k - 1] == n - na + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < na; ++j) idx[j] = idx[j - 1] + 1;
  }
  res.p = static_cast<double>(extreme) / static_cast<double>(total);
  return res;
}

MannWhitneyResult mann_whitney_normal(std::span<const double> a, std::span<const double> b) {
  check_nonempty(a, b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double n = na + nb;
  auto ranks = midranks(a, b);
  MannWhitneyResult res;
  res.u = u_statistic(ranks, a.size());
  const double mu = 0.5 * na * nb;

  std::sort(ranks.begin(), ranks.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < ranks.size();) {
    std::size_t j = i;
    while (j + 1 < ranks.size() && ranks[j + 1] == ranks[i]) ++j;
    const auto t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    res.p = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.size() + b.size() <= 12) return mann_whitney_exact(a, b);
  return mann_whitney_normal(a, b);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(Errc::kEmptySample, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace myoloop
