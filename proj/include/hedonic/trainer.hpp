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

#ifndef HEDONIC_TRAINER_HPP_
#define HEDONIC_TRAINER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hedonic/error.hpp"
#include "hedonic/market_data.hpp"
#include "hedonic/network.hpp"

namespace hedonic {

/// Product features, one row per product id.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<ProductId> ids, Eigen::MatrixXd values)
      : ids_(std::move(ids)), values_(std::move(values)) {
    if (static_cast<Eigen::Index>(ids_.size()) != values_.rows())
      throw DimensionError("feature matrix: id count does not match row count");
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (!index_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second)
        throw ValidationError("feature matrix: duplicate product " + ids_[i]);
    if (!values_.allFinite()) throw ValidationError("feature matrix: non-finite entries");
  }

  const std::vector<ProductId>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index width() const { return values_.cols(); }

  std::optional<Eigen::Index> row(const ProductId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Stacks the rows of `ids` in order; unknown ids raise LookupError.
  Eigen::MatrixXd gather(std::span<const ProductId> ids) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), values_.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto r = row(ids[i]);
      if (!r) throw LookupError("no features for product " + ids[i]);
      out.row(static_cast<Eigen::Index>(i)) = values_.row(*r);
    }
    return out;
  }

 private:
  std::vector<ProductId> ids_;
  Eigen::MatrixXd values_;
  std::unordered_map<ProductId, Eigen::Index> index_;
};

/// Disjoint train / validation / test product sets (panel product indices,
/// sorted).
struct DataSplit {
  std::vector<std::size_t> train, validation, test;
  std::vector<std::string> warnings;
};

/// Products with at least one usable price (Q > 0 and S > 0), and the first
/// period in which that happens.
inline std::vector<std::pair<std::size_t, Period>> usable_products(const TransactionPanel& panel) {
  std::vector<int> first(panel.product_count(), -1);
  for (Period t = panel.periods() - 1; t >= 0; --t)
    for (const auto& c : panel.cells(t))
      if (c.quantity > 0.0 && c.sales > 0.0) first[c.product] = t;
  std::vector<std::pair<std::size_t, Period>> out;
  for (std::size_t i = 0; i < first.size(); ++i)
    if (first[i] >= 0) out.emplace_back(i, first[i]);
  return out;
}

namespace detail {

/// Largest-remainder apportionment of n items over the fractions.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& f) {
  std::array<std::size_t, 3> k{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = f[s] * static_cast<double>(n);
    k[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[s] = exact - static_cast<double>(k[s]);
    used += k[s];
  }
  while (used < n) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (rem[s] > rem[best] + 1e-12) best = s;
    ++k[best];
    rem[best] = -1.0;
    ++used;
  }
  while (used > n) {  // only from rounding slack
    for (int s = 2; s >= 0 && used > n; --s)
      if (k[s] > 0) {
        --k[s];
        --used;
      }
  }
  return k;
}

}  // namespace detail

/// Assigns usable products to train/validation/test in proportion to
/// `fractions`, separately within each first-transaction-month stratum.
/// Strata with fewer products than non-empty splits are pooled and assigned
/// globally, with a warning.
inline DataSplit split_stratified(const TransactionPanel& panel, std::array<double, 3> fractions,
                                  std::uint64_t seed) {
  double total = 0.0;
  int nonzero = 0;
  for (double f : fractions) {
    if (f < 0.0 || !std::isfinite(f)) throw PreconditionError("split fractions must be >= 0");
    total += f;
    nonzero += f > 0.0;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw PreconditionError("split fractions must sum to 1");
  std::map<Period, std::vector<std::size_t>> strata;
  for (auto [i, t] : usable_products(panel)) strata[t].push_back(i);

  std::mt19937_64 rng(seed);
  DataSplit out;
  std::array<std::vector<std::size_t>*, 3> dst{&out.train, &out.validation, &out.test};
  auto assign = [&](std::vector<std::size_t> items) {
    std::shuffle(items.begin(), items.end(), rng);
    const auto k = detail::apportion(items.size(), fractions);
    std::size_t o = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t j = 0; j < k[s]; ++j) dst[s]->push_back(items[o++]);
  };
  std::vector<std::size_t> pooled;
  for (auto& [t, items] : strata) {
    if (static_cast<int>(items.size()) < nonzero) {
      out.warnings.push_back("stratum " + panel.period_label(t) + " has " +
                             std::to_string(items.size()) +
                             " products; assigned through the global pool");
      pooled.insert(pooled.end(), items.begin(), items.end());
    } else {
      assign(std::move(items));
    }
  }
  if (!pooled.empty()) assign(std::move(pooled));
  for (auto* v : dst) std::sort(v->begin(), v->end());
  return out;
}

struct TrainingConfig {
  AdamConfig adam;
  int epochs = 100;
  std::size_t batch_size = 64;
  double smoothness = 0.0;  // lambda
  PriceTransform transform = PriceTransform::identity;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool standardize_inputs = true;
  /// Keep cells with Q > 0 and S = 0 as zero-price targets (identity only).
  bool include_zero_prices = false;

  nlohmann::json to_json() const {
    return {{"learning_rate", adam.learning_rate}, {"beta1", adam.beta1},
            {"beta2", adam.beta2},                 {"epsilon", adam.epsilon},
            {"epochs", epochs},                    {"batch_size", batch_size},
            {"smoothness", smoothness},            {"transform", to_string(transform)},
            {"seed", seed},                        {"standardize_inputs", standardize_inputs},
            {"include_zero_prices", include_zero_prices}};
  }

  static TrainingConfig from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.smoothness = j.value("smoothness", c.smoothness);
    c.transform = price_transform_from_string(j.value("transform", std::string("identity")));
    c.seed = j.value("seed", c.seed);
    c.standardize_inputs = j.value("standardize_inputs", c.standardize_inputs);
    c.include_zero_prices = j.value("include_zero_prices", c.include_zero_prices);
    c.validate();
    return c;
  }

  void validate() const {
    if (!(adam.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (!(smoothness >= 0.0) || !std::isfinite(smoothness))
      throw ValidationError("smoothness lambda must be finite and >= 0");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  }
};

struct RSquared {
  std::vector<std::optional<double>> per_period;  // nullopt: undefined
  std::optional<double> pooled;
};

/// Per-period R^2 = 1 - SSR/SST over observed cells (weight > 0), and a
/// quantity-weighted pooled R^2 whose SST is taken around each period's own
/// weighted mean. Periods with < 2 observations or zero variance are
/// undefined.
inline RSquared r_squared(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& actual,
                          const Eigen::MatrixXd& weights) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() ||
      weights.rows() != actual.rows() || weights.cols() != actual.cols())
    throw DimensionError("r_squared: shape mismatch");
  RSquared out;
  double pooled_ssr = 0.0, pooled_sst = 0.0;
  for (Eigen::Index t = 0; t < actual.cols(); ++t) {
    double n = 0.0, mean = 0.0, wsum = 0.0, wmean = 0.0;
    for (Eigen::Index i = 0; i < actual.rows(); ++i)
      if (weights(i, t) > 0.0) {
        n += 1.0;
        mean += actual(i, t);
        wsum += weights(i, t);
        wmean += weights(i, t) * actual(i, t);
      }
    if (n < 2.0) {
      out.per_period.push_back(std::nullopt);
      continue;
    }
    mean /= n;
    wmean /= wsum;
    double ssr = 0.0, sst = 0.0, wssr = 0.0, wsst = 0.0;
    for (Eigen::Index i = 0; i < actual.rows(); ++i)
      if (weights(i, t) > 0.0) {
        const double e = actual(i, t) - predicted(i, t);
        ssr += e * e;
        sst += (actual(i, t) - mean) * (actual(i, t) - mean);
        wssr += weights(i, t) * e * e;
        wsst += weights(i, t) * (actual(i, t) - wmean) * (actual(i, t) - wmean);
      }
    if (sst > 0.0) {
      out.per_period.push_back(1.0 - ssr / sst);
      pooled_ssr += wssr;
      pooled_sst += wsst;
    } else {
      out.per_period.push_back(std::nullopt);
    }
  }
  if (pooled_sst > 0.0) out.pooled = 1.0 - pooled_ssr / pooled_sst;
  return out;
}

/// Dense per-product view of a panel for the given products: raw prices,
/// transformed targets and quantity weights (0 where masked).
struct PanelMatrices {
  Eigen::MatrixXd prices;   // n x T, NaN where masked
  Eigen::MatrixXd targets;  // n x T, transformed, 0 where masked
  Eigen::MatrixXd weights;  // n x T
};

inline PanelMatrices panel_matrices(const TransactionPanel& panel,
                                    std::span<const std::size_t> products, PriceTransform transform,
                                    bool include_zero_prices = false) {
  const auto n = static_cast<Eigen::Index>(products.size());
  const Eigen::Index T = panel.periods();
  PanelMatrices m;
  m.prices = Eigen::MatrixXd::Constant(n, T, std::numeric_limits<double>::quiet_NaN());
  m.targets = Eigen::MatrixXd::Zero(n, T);
  m.weights = Eigen::MatrixXd::Zero(n, T);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t) {
      const PanelCell* c = panel.find(products[static_cast<std::size_t>(i)], static_cast<Period>(t));
      if (!c || !c->transacted()) continue;
      const double price = *c->price();
      const bool usable = price > 0.0 || (include_zero_prices && transform == PriceTransform::identity);
      if (!usable) continue;
      m.prices(i, t) = price;
      m.targets(i, t) = from_price(transform, price);
      m.weights(i, t) = c->quantity;
    }
  return m;
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // objective per unit of observed quantity
  double val_loss = 0.0;
  std::optional<double> val_r2;
};

struct TrainingResult {
  NetworkParams params;
  std::vector<EpochStats> curve;
  int best_epoch = 0;
  std::vector<ProductId> trained_on;  // sorted
};

/// Prices for every period, rows of `features` are products.
inline Eigen::MatrixXd predict_prices(const NetworkParams& p, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd out = value_embeddings(p, features) * p.heads.transpose();
  if (p.transform == PriceTransform::log) out = out.array().exp().matrix();
  return out;
}

namespace detail {

struct FitData {
  LossBatch batch;         // transformed targets
  Eigen::MatrixXd prices;  // raw prices, NaN where masked
};

inline FitData make_fit_data(const TransactionPanel& panel, const FeatureMatrix& features,
                             std::span<const std::size_t> products, const TrainingConfig& cfg,
                             std::optional<Period> only_period = std::nullopt) {
  std::vector<std::size_t> rows(products.begin(), products.end());
  PanelMatrices m = panel_matrices(panel, rows, cfg.transform, cfg.include_zero_prices);
  if (only_period) {
    const Period t = *only_period;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (m.weights(static_cast<Eigen::Index>(i), t) > 0.0) keep.push_back(i);
    FitData d;
    const auto n = static_cast<Eigen::Index>(keep.size());
    d.batch.targets.resize(n, 1);
    d.batch.weights.resize(n, 1);
    d.prices.resize(n, 1);
    std::vector<ProductId> ids;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(k)]);
      d.batch.targets(k, 0) = m.targets(i, t);
      d.batch.weights(k, 0) = m.weights(i, t);
      d.prices(k, 0) = m.prices(i, t);
      ids.push_back(panel.product_id(rows[static_cast<std::size_t>(i)]));
    }
    d.batch.features = features.gather(ids);
    return d;
  }
  std::vector<ProductId> ids;
  for (auto i : rows) ids.push_back(panel.product_id(i));
  FitData d;
  d.batch.features = features.gather(ids);
  d.batch.targets = std::move(m.targets);
  d.batch.weights = std::move(m.weights);
  d.prices = std::move(m.prices);
  return d;
}

inline LossBatch take_rows(const LossBatch& b, std::span<const std::size_t> idx) {
  LossBatch out;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.features.resize(n, b.features.cols());
  out.targets.resize(n, b.targets.cols());
  out.weights.resize(n, b.weights.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(k)]);
    out.features.row(k) = b.features.row(i);
    out.targets.row(k) = b.targets.row(i);
    out.weights.row(k) = b.weights.row(i);
  }
  return out;
}

/// Objective on raw scale per unit of observed quantity.
inline double normalized_loss(const NetworkParams& p, const LossBatch& b, double lambda) {
  return loss(p, b, lambda) / b.weights.sum();
}

inline TrainingResult fit(const FitData& train, const FitData* val, NetworkConfig net,
                          const TrainingConfig& cfg) {
  cfg.validate();
  net.validate();
  const LossBatch& tb = train.batch;
  if (tb.features.rows() == 0 || !(tb.weights.array() > 0.0).any())
    throw UndefinedError("train: no observed prices in the training split");
  if (tb.features.cols() != net.input_dim())
    throw DimensionError("train: feature width " + std::to_string(tb.features.cols()) +
                         " does not match network input " + std::to_string(net.input_dim()));

  NetworkParams p = init_params(net, cfg.seed);
  p.transform = cfg.transform;
  if (cfg.standardize_inputs) {
    p.input_shift = tb.features.colwise().mean().transpose();
    Eigen::VectorXd sd =
        ((tb.features.rowwise() - p.input_shift.transpose()).array().square().colwise().mean())
            .sqrt()
            .transpose();
    p.input_scale = sd.unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });
  }

  // Train on targets divided by their weighted RMS; heads are rescaled at the
  // end. lambda is divided by the same factor so the argmin is unchanged.
  const double wsum = tb.weights.sum();
  double scale = std::sqrt((tb.weights.array() * tb.targets.array().square()).sum() / wsum);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  LossBatch scaled = tb;
  scaled.targets /= scale;
  const double lambda_int = cfg.smoothness / scale;

  auto folded = [&](const NetworkParams& q) {
    NetworkParams f = q;
    f.heads *= scale;
    return f;
  };

  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(static_cast<std::size_t>(tb.features.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam;
  Eigen::VectorXd theta = p.flatten(), grad;

  TrainingResult res;
  double best = std::numeric_limits<double>::infinity();
  const bool has_val = val && val->batch.features.rows() > 0 && (val->batch.weights.array() > 0.0).any();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      LossBatch mb = take_rows(scaled, std::span(order).subspan(b, e - b));
      if (!(mb.weights.array() > 0.0).any()) continue;
      DropoutMasks masks;
      if (!net.dropout.empty()) masks = sample_dropout(net, mb.features.rows(), rng);
      const double l = loss_and_gradient(p, mb, lambda_int, grad, &masks, cfg.threads);
      if (!std::isfinite(l) || !grad.allFinite()) throw DivergenceError("training diverged", epoch);
      try {
        adam_step(adam, theta, grad, cfg.adam);
      } catch (const DivergenceError&) {
        throw DivergenceError("training diverged", epoch);
      }
      p.unflatten(theta);
    }
    const NetworkParams f = folded(p);
    if (!f.all_finite()) throw DivergenceError("training diverged", epoch);
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = normalized_loss(f, tb, cfg.smoothness);
    if (!std::isfinite(st.train_loss)) throw DivergenceError("training diverged", epoch);
    double select = st.train_loss;
    if (has_val) {
      st.val_loss = normalized_loss(f, val->batch, cfg.smoothness);
      const Eigen::MatrixXd pred = predict_prices(f, val->batch.features);
      st.val_r2 = r_squared(pred, val->prices.array().isNaN().select(0.0, val->prices),
                            val->batch.weights)
                      .pooled;
      select = st.val_loss;
    } else {
      st.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    res.curve.push_back(st);
    if (select < best) {
      best = select;
      res.best_epoch = epoch;
      res.params = f;
    }
  }
  return res;
}

}  // namespace detail

/// Trains the multi-task network on the train split and keeps the
/// parameters from the epoch with the lowest validation loss (training loss
/// when there is no validation data).
inline TrainingResult train(const TransactionPanel& panel, const FeatureMatrix& features,
                            const DataSplit& split, NetworkConfig net, const TrainingConfig& cfg) {
  if (net.periods != panel.periods())
    throw DimensionError("network periods (" + std::to_string(net.periods) +
                         ") differ from panel periods (" + std::to_string(panel.periods()) + ")");
  const auto tr = detail::make_fit_data(panel, features, split.train, cfg);
  const auto va = detail::make_fit_data(panel, features, split.validation, cfg);
  TrainingResult res = detail::fit(tr, &va, std::move(net), cfg);
  for (auto i : split.train) res.trained_on.push_back(panel.product_id(i));
  std::sort(res.trained_on.begin(), res.trained_on.end());
  return res;
}

/// One single-period network per period with the same trunk shape; a
/// baseline for the multi-task model. Periods without training data yield
/// nullopt.
inline std::vector<std::optional<TrainingResult>> train_single_task(
    const TransactionPanel& panel, const FeatureMatrix& features, const DataSplit& split,
    NetworkConfig net, const TrainingConfig& cfg) {
  net.periods = 1;
  std::vector<std::optional<TrainingResult>> out;
  for (Period t = 0; t < panel.periods(); ++t) {
    const auto tr = detail::make_fit_data(panel, features, split.train, cfg, t);
    if (tr.batch.features.rows() == 0) {
      out.push_back(std::nullopt);
      continue;
    }
    const auto va = detail::make_fit_data(panel, features, split.validation, cfg, t);
    TrainingConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(t) * 7919ULL;
    out.push_back(detail::fit(tr, &va, net, c));
  }
  return out;
}

/// Frozen value embeddings V_i, plus the training products they came from.
class ValueEmbeddingTable {
 public:
  ValueEmbeddingTable(std::vector<ProductId> ids, Eigen::MatrixXd values,
                      std::vector<ProductId> trained_on)
      : ids_(std::move(ids)), values_(std::move(values)), trained_on_(std::move(trained_on)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], static_cast<Eigen::Index>(i));
    std::sort(trained_on_.begin(), trained_on_.end());
  }

  const std::vector<ProductId>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<ProductId>& trained_on() const { return trained_on_; }
  Eigen::Index dim() const { return values_.cols(); }

  bool contains(const ProductId& id) const { return index_.count(id) != 0; }
  bool was_trained_on(const ProductId& id) const {
    return std::binary_search(trained_on_.begin(), trained_on_.end(), id);
  }

  Eigen::VectorXd lookup(const ProductId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw LookupError("no value embedding for product " + id);
    return values_.row(it->second).transpose();
  }

 private:
  std::vector<ProductId> ids_;
  Eigen::MatrixXd values_;
  std::vector<ProductId> trained_on_;
  std::unordered_map<ProductId, Eigen::Index> index_;
};

/// V_i for each requested product with dropout disabled.
inline ValueEmbeddingTable extract_value_embeddings(const NetworkParams& params,
                                                    const FeatureMatrix& features,
                                                    std::span<const ProductId> products,
                                                    std::vector<ProductId> trained_on = {}) {
  const Eigen::MatrixXd x = features.gather(products);
  return ValueEmbeddingTable(std::vector<ProductId>(products.begin(), products.end()),
                             value_embeddings(params, x), std::move(trained_on));
}

}  // namespace hedonic

#endif  // HEDONIC_TRAINER_HPP_
