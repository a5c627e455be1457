// Copyright 2026 The Hedonic Index Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEDONIC_STATS_HPP_
#define HEDONIC_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "hedonic/error.hpp"

namespace hedonic::stats {

/// Phi^{-1}(p) of the standard normal.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw PreconditionError("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// P(|Z| >= |z|).
inline double two_sided_normal_pvalue(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

/// Median; the mean of the two middle values for even sizes.
inline double median(std::vector<double> v) {
  if (v.empty()) throw UndefinedError("median of empty sample");
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  const double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + m);
  return 0.5 * (lo + hi);
}

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of the first sample
  double z = 0.0;        // tie-corrected normal approximation
  double p_greater = 1;  // one-sided: first sample stochastically larger
};

/// Wilcoxon rank-sum / Mann-Whitney U with average ranks for ties and the
/// usual tie-corrected variance.
inline RankSumResult rank_sum_test(std::span<const double> a,
                                   std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  if (na == 0 || nb == 0) throw UndefinedError("rank_sum_test: empty sample");
  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  double rank_sum_a = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_sum_a += avg;
    i = j;
  }
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  const double dn = static_cast<double>(n);
  RankSumResult r;
  r.u = rank_sum_a - dna * (dna + 1.0) / 2.0;
  const double mean = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    r.z = 0.0;
    r.p_greater = 0.5;
    return r;
  }
  r.z = (r.u - mean) / std::sqrt(var);
  r.p_greater = 1.0 - normal_cdf(r.z);
  return r;
}

}  // namespace hedonic::stats

#endif  // HEDONIC_STATS_HPP_
