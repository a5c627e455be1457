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

#ifndef HEDONIC_SYNTHGEN_HPP_
#define HEDONIC_SYNTHGEN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hedonic/detail/csv.hpp"
#include "hedonic/detail/parallel.hpp"
#include "hedonic/error.hpp"
#include "hedonic/indices.hpp"
#include "hedonic/market_data.hpp"

/*
 * Synthetic market with a known hedonic function.
 *
 * Each product carries one level per categorical attribute. The true hedonic
 * price is H*_it = G_t * h_t(x_i) with G_t the cumulative inflation factor
 * and h_t either
 *
 *   linear:     base * (1 + sum_k w_kt[l_k])
 *   nonlinear:  base * exp(sum_k w_kt[l_k] + gamma * u[l_0][l_1])
 *
 * Every period a fixed number of active products exits and is replaced by
 * entrants, so the share of new products in C_t equals the turnover rate.
 * Observed prices are H* times mean-one log-normal noise; quantities follow
 * a log-normal demand with a constant price elasticity around H*, plus an
 * optional response to the price change since the previous period.
 *
 * Each (attribute, level) bucket owns a few synonym words. Titles use one
 * synonym per attribute in a fixed attribute order; descriptions and
 * bullets place all synonyms of a bucket side by side.
 */
namespace hedonic {

enum class TruthShape { linear, nonlinear };

struct MarketSpec {
  int n_products = 500;  // active products per period
  int periods = 36;
  double turnover = 0.1;
  int attributes = 4;
  int levels = 4;
  int synonyms = 2;
  TruthShape truth = TruthShape::linear;
  double base_price = 50.0;
  double effect_scale = 0.8;
  double interaction = 0.0;
  double coefficient_drift = 0.0;
  std::vector<double> inflation{1.0};  // one value: constant g; else g_t per period
  double price_noise = 0.0;
  double demand_mean = 2.5;  // log scale
  double demand_sd = 0.7;
  double quantity_noise = 0.3;
  double elasticity = 2.0;
  /// Extra demand response to the change in price since the previous period
  /// (sale spikes followed by post-sale dips).
  double reference_elasticity = 0.0;
  double no_sale_rate = 0.0;
  int image_dim = 8;
  double image_noise = 0.1;
  int filler_words = 24;
  int description_fillers = 6;
  int start_year = 2020;
  int start_month = 1;
  std::uint64_t seed = 1;

  double growth(Period t) const {
    if (inflation.size() == 1) return inflation[0];
    return inflation.at(static_cast<std::size_t>(t));
  }

  void validate() const {
    if (n_products < 1) throw ValidationError("market spec: n_products must be >= 1");
    if (periods < 1) throw ValidationError("market spec: periods must be >= 1");
    if (!(turnover >= 0.0 && turnover < 1.0)) throw ValidationError("market spec: turnover must lie in [0,1)");
    if (attributes < 1 || levels < 1 || synonyms < 1)
      throw ValidationError("market spec: attributes, levels and synonyms must be >= 1");
    if (!(price_noise >= 0.0)) throw ValidationError("market spec: price_noise must be >= 0");
    if (inflation.empty() || (inflation.size() != 1 && static_cast<int>(inflation.size()) != periods))
      throw ValidationError("market spec: inflation needs 1 or `periods` values");
    for (double g : inflation)
      if (!(g > 0.0)) throw ValidationError("market spec: inflation factors must be > 0");
    if (!(no_sale_rate >= 0.0 && no_sale_rate < 1.0))
      throw ValidationError("market spec: no_sale_rate must lie in [0,1)");
    if (image_dim < 0) throw ValidationError("market spec: image_dim must be >= 0");
    if (start_month < 1 || start_month > 12) throw ValidationError("market spec: start_month must be 1..12");
    const int words = attributes + attributes * levels * synonyms + filler_words;
    if (words > 4096) throw ValidationError("market spec: vocabulary too large");
  }

  nlohmann::json to_json() const {
    return {{"n_products", n_products},
            {"periods", periods},
            {"turnover", turnover},
            {"attributes", attributes},
            {"levels", levels},
            {"synonyms", synonyms},
            {"truth", truth == TruthShape::linear ? "linear" : "nonlinear"},
            {"base_price", base_price},
            {"effect_scale", effect_scale},
            {"interaction", interaction},
            {"coefficient_drift", coefficient_drift},
            {"inflation", inflation},
            {"price_noise", price_noise},
            {"demand_mean", demand_mean},
            {"demand_sd", demand_sd},
            {"quantity_noise", quantity_noise},
            {"elasticity", elasticity},
            {"reference_elasticity", reference_elasticity},
            {"no_sale_rate", no_sale_rate},
            {"image_dim", image_dim},
            {"image_noise", image_noise},
            {"filler_words", filler_words},
            {"description_fillers", description_fillers},
            {"start_year", start_year},
            {"start_month", start_month},
            {"seed", seed}};
  }

  static MarketSpec from_json(const nlohmann::json& j) {
    MarketSpec s;
    s.n_products = j.value("n_products", s.n_products);
    s.periods = j.value("periods", s.periods);
    s.turnover = j.value("turnover", s.turnover);
    s.attributes = j.value("attributes", s.attributes);
    s.levels = j.value("levels", s.levels);
    s.synonyms = j.value("synonyms", s.synonyms);
    const std::string shape = j.value("truth", std::string("linear"));
    if (shape == "linear")
      s.truth = TruthShape::linear;
    else if (shape == "nonlinear")
      s.truth = TruthShape::nonlinear;
    else
      throw ValidationError("market spec: unknown truth shape '" + shape + "'");
    s.base_price = j.value("base_price", s.base_price);
    s.effect_scale = j.value("effect_scale", s.effect_scale);
    s.interaction = j.value("interaction", s.interaction);
    s.coefficient_drift = j.value("coefficient_drift", s.coefficient_drift);
    if (j.contains("inflation")) {
      if (j["inflation"].is_array())
        s.inflation = j["inflation"].get<std::vector<double>>();
      else
        s.inflation = {j["inflation"].get<double>()};
    }
    s.price_noise = j.value("price_noise", s.price_noise);
    s.demand_mean = j.value("demand_mean", s.demand_mean);
    s.demand_sd = j.value("demand_sd", s.demand_sd);
    s.quantity_noise = j.value("quantity_noise", s.quantity_noise);
    s.elasticity = j.value("elasticity", s.elasticity);
    s.reference_elasticity = j.value("reference_elasticity", s.reference_elasticity);
    s.no_sale_rate = j.value("no_sale_rate", s.no_sale_rate);
    s.image_dim = j.value("image_dim", s.image_dim);
    s.image_noise = j.value("image_noise", s.image_noise);
    s.filler_words = j.value("filler_words", s.filler_words);
    s.description_fillers = j.value("description_fillers", s.description_fillers);
    s.start_year = j.value("start_year", s.start_year);
    s.start_month = j.value("start_month", s.start_month);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  }
};

struct GeneratedPanel {
  MarketSpec spec;
  TransactionPanel panel;
  std::vector<ProductCatalogEntry> catalog;  // one per product, panel order
  HedonicSurface truth;                      // H*, every product and period
  Eigen::MatrixXi attributes;                // products x attributes, level ids
  std::vector<double> cumulative_inflation;  // G_t, G_0 = 1
  /// Bucket vocabulary: words[k][l] are the synonyms of level l of attribute k.
  std::vector<std::vector<std::vector<std::string>>> bucket_words;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

/// Three-syllable pseudo-word, distinct for distinct ids below 4096.
inline std::string pseudo_word(int id) {
  static constexpr const char* kSyl[16] = {"ba", "de", "fi", "go", "ku", "la", "me", "ni",
                                           "po", "ru", "sa", "te", "vi", "zo", "ha", "ye"};
  const int v = (id * 2897 + 1231) % 4096;
  return std::string(kSyl[v / 256]) + kSyl[(v / 16) % 16] + kSyl[v % 16];
}

inline std::string join_words(const std::vector<std::string>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + w[i];
  return s;
}

}  // namespace detail

inline GeneratedPanel generate_panel(const MarketSpec& spec) {
  spec.validate();
  GeneratedPanel out;
  out.spec = spec;
  const int K = spec.attributes, L = spec.levels, S = spec.synonyms, T = spec.periods;

  // Vocabulary.
  std::vector<std::string> attr_names;
  int wid = 0;
  for (int k = 0; k < K; ++k) attr_names.push_back(detail::pseudo_word(wid++));
  out.bucket_words.assign(K, std::vector<std::vector<std::string>>(L));
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      for (int s = 0; s < S; ++s) out.bucket_words[k][l].push_back(detail::pseudo_word(wid++));
  std::vector<std::string> fillers;
  for (int f = 0; f < spec.filler_words; ++f) fillers.push_back(detail::pseudo_word(wid++));

  // Structural parameters.
  auto srng = detail::substream(spec.seed, 1);
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> effect(K, std::vector<double>(L)), drift(K, std::vector<double>(L));
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      const double u = unif(srng);
      effect[k][l] = spec.truth == TruthShape::linear ? spec.effect_scale * u : spec.effect_scale * (2.0 * u - 1.0);
      drift[k][l] = stdn(srng);
    }
  std::vector<std::vector<double>> inter(L, std::vector<double>(L));
  for (auto& row : inter)
    for (auto& v : row) v = stdn(srng);
  Eigen::MatrixXd image_map(spec.image_dim, K * L);
  for (Eigen::Index c = 0; c < image_map.cols(); ++c)
    for (Eigen::Index r = 0; r < image_map.rows(); ++r) image_map(r, c) = stdn(srng) / std::sqrt(K);

  out.cumulative_inflation.assign(T, 1.0);
  for (int t = 1; t < T; ++t) out.cumulative_inflation[t] = out.cumulative_inflation[t - 1] * spec.growth(t);

  // Lifetimes: birth[i] and death[i] (exclusive).
  auto lrng = detail::substream(spec.seed, 2);
  std::vector<int> birth, death;
  std::vector<int> active;
  for (int i = 0; i < spec.n_products; ++i) {
    birth.push_back(0);
    death.push_back(T);
    active.push_back(i);
  }
  const int churn = static_cast<int>(std::lround(spec.turnover * spec.n_products));
  for (int t = 1; t < T && churn > 0; ++t) {
    std::shuffle(active.begin(), active.end(), lrng);
    for (int j = 0; j < churn; ++j) death[active[j]] = t;
    active.erase(active.begin(), active.begin() + churn);
    for (int j = 0; j < churn; ++j) {
      active.push_back(static_cast<int>(birth.size()));
      birth.push_back(t);
      death.push_back(T);
    }
    std::sort(active.begin(), active.end());
  }
  const int N = static_cast<int>(birth.size());

  // Attributes and truth.
  auto arng = detail::substream(spec.seed, 3);
  std::uniform_int_distribution<int> level_dist(0, L - 1);
  out.attributes.resize(N, K);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) out.attributes(i, k) = level_dist(arng);
  auto h = [&](int i, int t) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      const int l = out.attributes(i, k);
      sum += effect[k][l] * std::max(0.0, 1.0 + spec.coefficient_drift * t * drift[k][l]);
    }
    if (spec.truth == TruthShape::linear) return spec.base_price * (1.0 + sum);
    const double x = K >= 2 ? spec.interaction * inter[out.attributes(i, 0)][out.attributes(i, 1)] : 0.0;
    return spec.base_price * std::exp(sum + x);
  };
  Eigen::MatrixXd truth(N, T);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) truth(i, t) = out.cumulative_inflation[t] * h(i, t);

  // Transactions.
  auto prng = detail::substream(spec.seed, 4);
  std::vector<double> base_demand(N);
  for (int i = 0; i < N; ++i) base_demand[i] = std::exp(spec.demand_mean + spec.demand_sd * stdn(prng));
  const double sp = spec.price_noise, sq = spec.quantity_noise;
  std::vector<TransactionRecord> recs;
  std::vector<std::string> ids(N);
  for (int i = 0; i < N; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%06d", i);
    ids[i] = buf;
  }
  std::vector<double> prev_rel(N, 1.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) {
      if (t < birth[i] || t >= death[i]) continue;
      const double z = stdn(prng), zq = stdn(prng), u = unif(prng);
      const double rel = std::exp(sp * z - 0.5 * sp * sp);
      const double change = t > birth[i] ? rel / prev_rel[i] : 1.0;
      prev_rel[i] = rel;
      if (spec.no_sale_rate > 0.0 && u < spec.no_sale_rate) {
        recs.push_back({ids[i], t, 0.0, 0.0});
        continue;
      }
      const double price = truth(i, t) * rel;
      const double demand = base_demand[i] * std::pow(rel, -spec.elasticity) *
                            std::pow(change, -spec.reference_elasticity) * std::exp(sq * zq - 0.5 * sq * sq);
      const double q = std::max(1.0, std::round(demand));
      recs.push_back({ids[i], t, price * q, q});
    }
  std::vector<std::string> labels;
  for (int t = 0; t < T; ++t) {
    const int m = spec.start_year * 12 + spec.start_month - 1 + t;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d", m / 12, m % 12 + 1);
    labels.emplace_back(buf);
  }
  out.panel = TransactionPanel::from_records(std::move(recs), labels, T);

  // Panel product order is lexicographic in id, which equals creation order.
  out.truth.values = truth;

  // Text and image features.
  auto trng = detail::substream(spec.seed, 5);
  std::uniform_int_distribution<int> syn_dist(0, S - 1);
  std::uniform_int_distribution<int> fill_dist(0, std::max(0, spec.filler_words - 1));
  for (int i = 0; i < N; ++i) {
    ProductCatalogEntry e;
    e.product_id = ids[i];
    std::vector<std::string> title, desc;
    for (int k = 0; k < K; ++k) {
      const auto& words = out.bucket_words[k][out.attributes(i, k)];
      title.push_back(words[syn_dist(trng)]);
      std::vector<std::string> phrase = words;
      std::shuffle(phrase.begin(), phrase.end(), trng);
      desc.insert(desc.end(), phrase.begin(), phrase.end());
      e.bullet_points.push_back(attr_names[k] + " " + detail::join_words(phrase));
    }
    if (spec.filler_words > 0)
      for (int f = 0; f < spec.description_fillers; ++f) {
        std::uniform_int_distribution<std::size_t> pos(0, desc.size());
        desc.insert(desc.begin() + static_cast<std::ptrdiff_t>(pos(trng)), fillers[fill_dist(trng)]);
      }
    e.title = detail::join_words(title);
    e.description = detail::join_words(desc);
    if (spec.image_dim > 0) {
      Eigen::VectorXd onehot = Eigen::VectorXd::Zero(K * L);
      for (int k = 0; k < K; ++k) onehot[k * L + out.attributes(i, k)] = 1.0;
      Eigen::VectorXd f = image_map * onehot;
      std::vector<double> v(static_cast<std::size_t>(spec.image_dim));
      for (int d = 0; d < spec.image_dim; ++d) v[d] = f[d] + spec.image_noise * stdn(trng);
      e.image_features = std::move(v);
    }
    out.catalog.push_back(std::move(e));
  }

  // Feasibility.
  if (T > 12) {
    const double expected = spec.n_products * std::pow(1.0 - spec.turnover, 12.0);
    int empty = 0;
    for (int t = 12; t < T; ++t)
      if (match_set(out.panel, t, 12).empty()) ++empty;
    if (empty > 0 || expected < 1.0) {
      char buf[200];
      std::snprintf(buf, sizeof(buf),
                    "infeasible for lag 12: expected %.2f surviving products per year, %d of %d periods "
                    "have an empty lag-12 match set",
                    expected, empty, T - 12);
      out.warnings.emplace_back(buf);
    }
  }
  return out;
}

/// Index computed from the true hedonic prices.
inline double true_index(const GeneratedPanel& g, Period t, int lag, Formula f) {
  return bilateral_hedonic(g.truth, g.panel, t, lag, f);
}

inline void write_truth_csv(std::ostream& os, const GeneratedPanel& g) {
  os << "product_id,period,true_hedonic_price\n";
  for (std::size_t i = 0; i < g.panel.product_count(); ++i)
    for (Period t = 0; t < g.panel.periods(); ++t)
      os << g.panel.product_id(i) << ',' << g.panel.period_label(t) << ','
         << detail::format_double(g.truth.at(i, t)) << '\n';
}

struct DriftReport {
  Period horizon = 0;
  std::vector<double> monthly;  // |log level| of the lag-1 chain at horizon
  std::vector<double> yearly;   // |log level| of the lag-12 chain at horizon
  double mean_monthly = 0.0;
  double mean_yearly = 0.0;
  double fraction_monthly_greater = 0.0;
};

/// Chain drift of the matched Fisher index on noisy panels with stationary
/// truth. Replication r reseeds the spec with a value derived from
/// (spec.seed, r). The horizon is the last multiple of 12 inside the panel.
inline DriftReport drift_experiment(const MarketSpec& spec, int replications, std::size_t threads = 1) {
  spec.validate();
  for (double g : spec.inflation)
    if (g != 1.0) throw PreconditionError("drift_experiment: needs stationary truth (inflation 1)");
  if (spec.coefficient_drift != 0.0)
    throw PreconditionError("drift_experiment: needs stationary truth (coefficient_drift 0)");
  if (replications < 1) throw PreconditionError("drift_experiment: replications must be >= 1");
  DriftReport rep;
  rep.horizon = ((spec.periods - 1) / 12) * 12;
  if (rep.horizon < 12) throw PreconditionError("drift_experiment: needs at least 13 periods");
  using Pairs = std::vector<std::pair<double, double>>;
  const Pairs res = detail::ordered_reduce<Pairs>(
      static_cast<std::size_t>(replications), threads, Pairs{},
      [&](Pairs& acc, std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
          MarketSpec s = spec;
          s.seed = detail::splitmix64(spec.seed * 1000003ULL + r);
          const auto g = generate_panel(s);
          auto level = [&](int lag) {
            const int steps = rep.horizon / lag;
            return chain([&](Period t, int l) { return bilateral_matched(g.panel, t, l, Formula::fisher); }, 0,
                         lag, steps, IndexKind::matched_F)
                .level(rep.horizon);
          };
          acc.emplace_back(std::fabs(std::log(level(1))), std::fabs(std::log(level(12))));
        }
      },
      [](Pairs& acc, Pairs& part) { acc.insert(acc.end(), part.begin(), part.end()); });
  int greater = 0;
  for (const auto& [m, y] : res) {
    rep.monthly.push_back(m);
    rep.yearly.push_back(y);
    rep.mean_monthly += m;
    rep.mean_yearly += y;
    greater += m > y;
  }
  rep.mean_monthly /= replications;
  rep.mean_yearly /= replications;
  rep.fraction_monthly_greater = static_cast<double>(greater) / replications;
  return rep;
}

}  // namespace hedonic

#endif  // HEDONIC_SYNTHGEN_HPP_
