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

#ifndef HEDONIC_INDICES_HPP_
#define HEDONIC_INDICES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hedonic/error.hpp"
#include "hedonic/market_data.hpp"

namespace hedonic {

enum class Formula { laspeyres, paasche, fisher };

enum class IndexKind {
  matched_L,
  matched_P,
  matched_F,
  hedonic_L,
  hedonic_P,
  hedonic_F,
  jevons,
  combined
};

inline std::string to_string(IndexKind k) {
  switch (k) {
    case IndexKind::matched_L: return "matched_L";
    case IndexKind::matched_P: return "matched_P";
    case IndexKind::matched_F: return "matched_F";
    case IndexKind::hedonic_L: return "hedonic_L";
    case IndexKind::hedonic_P: return "hedonic_P";
    case IndexKind::hedonic_F: return "hedonic_F";
    case IndexKind::jevons: return "jevons";
    case IndexKind::combined: return "combined";
  }
  return "?";
}

inline IndexKind index_kind_from_string(const std::string& s) {
  for (auto k : {IndexKind::matched_L, IndexKind::matched_P, IndexKind::matched_F, IndexKind::hedonic_L,
                 IndexKind::hedonic_P, IndexKind::hedonic_F, IndexKind::jevons, IndexKind::combined})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown index kind '" + s + "'");
}

/// Hedonic prices H_it aligned with a panel: rows are panel product indices,
/// columns periods, NaN where no hedonic price is available.
struct HedonicSurface {
  Eigen::MatrixXd values;

  bool defined(std::size_t i, Period t) const {
    return !std::isnan(values(static_cast<Eigen::Index>(i), t));
  }
  double at(std::size_t i, Period t) const { return values(static_cast<Eigen::Index>(i), t); }
};

/// sum p1*q / sum p0*q over one basket.
inline double basket_ratio(std::span<const double> p0, std::span<const double> p1,
                           std::span<const double> q) {
  if (p0.size() != p1.size() || p0.size() != q.size())
    throw DimensionError("basket_ratio: vectors differ in length");
  if (p0.empty()) throw IndexError("no overlap: empty basket");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    num += p1[i] * q[i];
    den += p0[i] * q[i];
  }
  if (!(den > 0.0)) throw IndexError("degenerate basket: zero denominator");
  return num / den;
}

/// Laspeyres over the base-period basket, Paasche over the current one,
/// Fisher their geometric mean.
struct BilateralParts {
  double laspeyres = 1.0, paasche = 1.0;
  double fisher() const { return std::sqrt(laspeyres * paasche); }
  double get(Formula f) const {
    return f == Formula::laspeyres ? laspeyres : f == Formula::paasche ? paasche : fisher();
  }
};

namespace detail {

struct Basket {
  std::vector<double> p0, p1, q;
};

inline double checked_price(const TransactionPanel& panel, std::size_t i, Period t) {
  const auto p = panel.price(i, t);
  if (!p || !(*p > 0.0))
    throw ValidationError("non-positive price for product " + panel.product_id(i) + " at period " +
                          std::to_string(t));
  return *p;
}

}  // namespace detail

/// Matched-model L, P and F for t relative to t - lag over C_t ∩ C_{t-lag}.
inline BilateralParts matched_parts(const TransactionPanel& panel, Period t, int lag) {
  panel.check_period(t);
  const auto m = match_set(panel, t, lag);
  if (m.empty())
    throw IndexError("no overlap between periods " + std::to_string(t - lag) + " and " + std::to_string(t));
  detail::Basket l, p;
  for (auto i : m) {
    const double p0 = detail::checked_price(panel, i, t - lag);
    const double p1 = detail::checked_price(panel, i, t);
    l.p0.push_back(p0);
    l.p1.push_back(p1);
    l.q.push_back(panel.quantity(i, t - lag));
    p.q.push_back(panel.quantity(i, t));
  }
  return {basket_ratio(l.p0, l.p1, l.q), basket_ratio(l.p0, l.p1, p.q)};
}

inline double bilateral_matched(const TransactionPanel& panel, Period t, int lag, Formula f) {
  return matched_parts(panel, t, lag).get(f);
}

/// Hedonic L over C_{t-lag} with Q_{t-lag} weights and hedonic P over C_t
/// with Q_t weights. Every basket member needs H at both t and t - lag.
inline BilateralParts hedonic_parts(const HedonicSurface& h, const TransactionPanel& panel, Period t,
                                    int lag) {
  panel.check_period(t);
  if (lag < 0 || t - lag < 0) throw PreconditionError("hedonic index: t - lag must be >= 0");
  if (h.values.rows() != static_cast<Eigen::Index>(panel.product_count()) ||
      h.values.cols() != panel.periods())
    throw DimensionError("hedonic surface shape does not match the panel");
  const Period s = t - lag;
  std::vector<std::string> missing;
  auto basket = [&](Period weight_period) {
    detail::Basket b;
    for (auto i : panel.universe(weight_period)) {
      bool ok = true;
      for (Period u : {s, t})
        if (!h.defined(i, u)) {
          missing.push_back(panel.product_id(i) + "@" + panel.period_label(u));
          ok = false;
        }
      if (!ok) continue;
      for (Period u : {s, t})
        if (!(h.at(i, u) > 0.0) || !std::isfinite(h.at(i, u)))
          throw ValidationError("non-positive hedonic price for product " + panel.product_id(i) +
                                " at period " + std::to_string(u));
      b.p0.push_back(h.at(i, s));
      b.p1.push_back(h.at(i, t));
      b.q.push_back(panel.quantity(i, weight_period));
    }
    return b;
  };
  const auto base = basket(s);
  const auto cur = basket(t);
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "missing hedonic prices for " + std::to_string(missing.size()) + " basket members:";
    for (std::size_t k = 0; k < missing.size() && k < 10; ++k) msg += " " + missing[k];
    if (missing.size() > 10) msg += " ...";
    throw CoverageError(msg, std::move(missing));
  }
  return {basket_ratio(base.p0, base.p1, base.q), basket_ratio(cur.p0, cur.p1, cur.q)};
}

inline double bilateral_hedonic(const HedonicSurface& h, const TransactionPanel& panel, Period t, int lag,
                                Formula f) {
  return hedonic_parts(h, panel, t, lag).get(f);
}

/// Geometric mean of price relatives.
inline double jevons(std::span<const double> relatives) {
  if (relatives.empty()) throw IndexError("no overlap: empty set of price relatives");
  double s = 0.0;
  for (double r : relatives) {
    if (!(r > 0.0)) throw ValidationError("jevons: price relatives must be positive");
    s += std::log(r);
  }
  return std::exp(s / static_cast<double>(relatives.size()));
}

/// Jevons over products with positive prices at both t and t - lag.
inline double jevons(const TransactionPanel& panel, Period t, int lag) {
  panel.check_period(t);
  if (lag < 0 || t - lag < 0) throw PreconditionError("jevons: t - lag must be >= 0");
  std::vector<double> rel;
  for (auto i : match_set(panel, t, lag)) {
    const auto p0 = panel.price(i, t - lag), p1 = panel.price(i, t);
    if (p0 && p1 && *p0 > 0.0 && *p1 > 0.0) rel.push_back(*p1 / *p0);
  }
  if (rel.empty())
    throw IndexError("no overlap between periods " + std::to_string(t - lag) + " and " + std::to_string(t));
  return jevons(rel);
}

/// Index levels keyed by period; chained kinds live on base + k*lag.
struct IndexSeries {
  std::map<Period, double> levels;
  Period base = 0;
  int lag = 1;
  IndexKind kind = IndexKind::matched_F;

  double level(Period t) const {
    auto it = levels.find(t);
    if (it == levels.end())
      throw IndexError("alignment: series " + to_string(kind) + " has no level at period " + std::to_string(t));
    return it->second;
  }
  bool contains(Period t) const { return levels.count(t) != 0; }
};

using BilateralFn = std::function<double(Period t, int lag)>;

/// level(t0 + k*lag) = product of the first k bilaterals; level(t0) = 1.
inline IndexSeries chain(const BilateralFn& bilateral, Period base, int lag, int steps, IndexKind kind) {
  if (lag < 1) throw PreconditionError("chain: lag must be >= 1");
  if (steps < 0) throw PreconditionError("chain: steps must be >= 0");
  IndexSeries s;
  s.base = base;
  s.lag = lag;
  s.kind = kind;
  double level = 1.0;
  s.levels[base] = level;
  for (int k = 1; k <= steps; ++k) {
    const Period t = base + k * lag;
    double r;
    try {
      r = bilateral(t, lag);
    } catch (const Error& e) {
      throw IndexError("chain step " + std::to_string(k) + " (period " + std::to_string(t) + "): " + e.what());
    }
    level *= r;
    s.levels[t] = level;
  }
  return s;
}

/// Number of whole lag steps from base that fit in a panel of T periods.
inline int chain_steps(int periods, Period base, int lag) {
  if (lag < 1 || base < 0 || base >= periods) return 0;
  return (periods - 1 - base) / lag;
}

inline IndexSeries chain_matched(const TransactionPanel& panel, Formula f, Period base, int lag) {
  const IndexKind k = f == Formula::laspeyres ? IndexKind::matched_L
                      : f == Formula::paasche ? IndexKind::matched_P
                                              : IndexKind::matched_F;
  return chain([&](Period t, int l) { return bilateral_matched(panel, t, l, f); }, base, lag,
               chain_steps(panel.periods(), base, lag), k);
}

inline IndexSeries chain_hedonic(const HedonicSurface& h, const TransactionPanel& panel, Formula f, Period base,
                                 int lag) {
  const IndexKind k = f == Formula::laspeyres ? IndexKind::hedonic_L
                      : f == Formula::paasche ? IndexKind::hedonic_P
                                              : IndexKind::hedonic_F;
  return chain([&](Period t, int l) { return bilateral_hedonic(h, panel, t, l, f); }, base, lag,
               chain_steps(panel.periods(), base, lag), k);
}

inline IndexSeries chain_jevons(const TransactionPanel& panel, Period base, int lag) {
  return chain([&](Period t, int l) { return jevons(panel, t, l); }, base, lag,
               chain_steps(panel.periods(), base, lag), IndexKind::jevons);
}

/// sqrt(a * b) on the periods both series cover.
inline IndexSeries geometric_combine(const IndexSeries& a, const IndexSeries& b) {
  IndexSeries out;
  out.kind = IndexKind::combined;
  out.lag = std::max(a.lag, b.lag);
  for (const auto& [t, la] : a.levels) {
    auto it = b.levels.find(t);
    if (it == b.levels.end()) continue;
    if (!(la > 0.0) || !(it->second > 0.0)) throw ValidationError("geometric_combine: levels must be positive");
    out.levels[t] = std::sqrt(la * it->second);
  }
  if (out.levels.empty()) throw IndexError("alignment: series share no periods");
  out.base = out.levels.begin()->first;
  return out;
}

/// Average annual rate in percent between two months of a series.
inline double annualized_rate(const IndexSeries& s, Period from, Period to) {
  if (to <= from) throw PreconditionError("annualized_rate: need to > from");
  const double l0 = s.level(from), l1 = s.level(to);
  return 100.0 * (std::pow(l1 / l0, 12.0 / static_cast<double>(to - from)) - 1.0);
}

}  // namespace hedonic

#endif  // HEDONIC_INDICES_HPP_
