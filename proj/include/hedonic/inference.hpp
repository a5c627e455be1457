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

#ifndef HEDONIC_INFERENCE_HPP_
#define HEDONIC_INFERENCE_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hedonic/error.hpp"
#include "hedonic/market_data.hpp"
#include "hedonic/stats.hpp"
#include "hedonic/trainer.hpp"

namespace hedonic {

enum class CovarianceKind { homoskedastic, sandwich };

struct OlsOptions {
  CovarianceKind covariance = CovarianceKind::homoskedastic;
  /// When set, rank-deficient designs are fitted with this ridge penalty
  /// instead of raising SingularDesignError. The fit is flagged.
  std::optional<double> ridge_fallback;
};

struct OlsFit {
  Period period = 0;
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd covariance;
  double residual_variance = 0.0;  // SSR / (n - p)
  Eigen::Index n_obs = 0;
  Eigen::VectorXd residuals;
  std::vector<ProductId> products;  // design rows, in order
  bool ridge = false;
  double ridge_penalty = 0.0;
  CovarianceKind covariance_kind = CovarianceKind::homoskedastic;

  Eigen::Index dim() const { return theta_hat.size(); }
};

/// Least squares of y on the columns of V, no intercept.
inline OlsFit ols(const Eigen::MatrixXd& v, const Eigen::VectorXd& y, const OlsOptions& opt = {}) {
  if (v.rows() != y.size()) throw DimensionError("ols: design rows do not match response length");
  if (!v.allFinite() || !y.allFinite()) throw ValidationError("ols: non-finite input");
  const Eigen::Index n = v.rows(), p = v.cols();
  if (n <= p)
    throw SingularDesignError("ols: " + std::to_string(n) + " observations for " + std::to_string(p) +
                              " coefficients; need n > p");
  OlsFit fit;
  fit.n_obs = n;
  fit.covariance_kind = opt.covariance;
  Eigen::MatrixXd gram = v.transpose() * v;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < p) {
    if (!opt.ridge_fallback)
      throw SingularDesignError("ols: design has rank " + std::to_string(qr.rank()) + " < " +
                                std::to_string(p));
    fit.ridge = true;
    fit.ridge_penalty = *opt.ridge_fallback;
    gram.diagonal().array() += fit.ridge_penalty;
    fit.theta_hat = gram.ldlt().solve(v.transpose() * y);
  } else {
    fit.theta_hat = qr.solve(y);
  }
  fit.residuals = y - v * fit.theta_hat;
  fit.residual_variance = fit.residuals.squaredNorm() / static_cast<double>(n - p);
  const Eigen::MatrixXd inv = gram.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  if (opt.covariance == CovarianceKind::sandwich) {
    const Eigen::MatrixXd meat =
        v.transpose() * fit.residuals.array().square().matrix().asDiagonal() * v;
    fit.covariance = inv * meat * inv;
  } else {
    fit.covariance = fit.residual_variance * inv;
  }
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
  return fit;
}

/// Per-period OLS of hold-out sale prices on frozen value embeddings. Only
/// holdout products transacted at `t` with a positive price enter.
inline OlsFit ols_on_embeddings(const ValueEmbeddingTable& table, const TransactionPanel& panel, Period t,
                                std::span<const ProductId> holdout, const OlsOptions& opt = {}) {
  panel.check_period(t);
  std::vector<ProductId> rows;
  std::vector<double> prices;
  for (const auto& id : holdout) {
    if (table.was_trained_on(id))
      throw PreconditionError("ols_on_embeddings: holdout product " + id + " was used for training");
    auto idx = panel.product_index(id);
    if (!idx) continue;
    auto price = panel.price(*idx, t);
    if (!price || !(*price > 0.0)) continue;
    rows.push_back(id);
    prices.push_back(*price);
  }
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), table.dim());
  for (std::size_t i = 0; i < rows.size(); ++i)
    v.row(static_cast<Eigen::Index>(i)) = table.lookup(rows[i]).transpose();
  OlsFit fit = ols(v, Eigen::Map<const Eigen::VectorXd>(prices.data(), static_cast<Eigen::Index>(prices.size())),
                   opt);
  fit.period = t;
  fit.products = std::move(rows);
  return fit;
}

/// sqrt(v' Cov v).
inline double standard_error(const OlsFit& fit, const Eigen::VectorXd& v) {
  if (v.size() != fit.dim()) throw DimensionError("standard_error: vector length mismatch");
  if (!v.allFinite()) throw ValidationError("standard_error: non-finite vector");
  return std::sqrt(std::max(0.0, v.dot(fit.covariance * v)));
}

enum class IntervalKind { hedonic_price, sale_price };

inline std::string to_string(IntervalKind k) {
  return k == IntervalKind::hedonic_price ? "hedonic_price" : "sale_price";
}

struct ConfidenceInterval {
  double center = 0.0, lower = 0.0, upper = 0.0;
  double se = 0.0;     // standard error behind the half-width
  double level = 0.0;  // 1 - alpha
  IntervalKind kind = IntervalKind::hedonic_price;
};

/// Normal interval center +- z_{1-alpha/2} * se.
inline ConfidenceInterval normal_interval(double center, double se, double alpha, IntervalKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  const double h = stats::normal_quantile(1.0 - alpha / 2.0) * se;
  return {center, center - h, center + h, se, 1.0 - alpha, kind};
}

/// Interval for the hedonic price theta_hat' v.
inline ConfidenceInterval hedonic_ci(const OlsFit& fit, const Eigen::VectorXd& v, double alpha) {
  return normal_interval(fit.theta_hat.dot(v), standard_error(fit, v), alpha,
                         IntervalKind::hedonic_price);
}

/// Interval for a sale price: half-width uses sqrt(SE^2 + Var(P - H)).
inline ConfidenceInterval predictive_ci(const OlsFit& fit, const Eigen::VectorXd& v, double alpha,
                                        double price_residual_variance) {
  if (!(price_residual_variance >= 0.0) || !std::isfinite(price_residual_variance))
    throw ValidationError("predictive_ci: residual variance must be finite and >= 0");
  const double se = standard_error(fit, v);
  return normal_interval(fit.theta_hat.dot(v), std::sqrt(se * se + price_residual_variance), alpha,
                         IntervalKind::sale_price);
}

/// Sample variance of P - H over the fit's design rows.
inline double price_residual_variance(const OlsFit& fit) {
  const Eigen::Index n = fit.residuals.size();
  if (n < 2) return 0.0;
  const double mean = fit.residuals.mean();
  return (fit.residuals.array() - mean).square().sum() / static_cast<double>(n - 1);
}

struct CoefficientTest {
  Eigen::VectorXd p_values;
  std::vector<bool> significant;  // p <= alpha / p_dim
  double alpha = 0.0;
};

/// Two-sided normal tests of theta_k = 0 with a Bonferroni threshold.
inline CoefficientTest pvalues_bonferroni(const OlsFit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  const Eigen::Index p = fit.dim();
  CoefficientTest out;
  out.alpha = alpha;
  out.p_values.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double se = std::sqrt(std::max(0.0, fit.covariance(k, k)));
    const double th = fit.theta_hat[k];
    double pv;
    if (th == 0.0)
      pv = 1.0;
    else if (se == 0.0)
      pv = 0.0;
    else
      pv = stats::two_sided_normal_pvalue(th / se);
    out.p_values[k] = pv;
    out.significant.push_back(pv <= alpha / static_cast<double>(p));
  }
  return out;
}

/// One split's per-(product, period) grid; NaN marks missing cells.
struct SplitEstimate {
  Eigen::MatrixXd estimates, lower, upper, p_values;
};

struct SplitAggregate {
  std::size_t splits = 0;
  Eigen::MatrixXd medians, lower, upper, p_values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> significant;  // median p <= alpha / 2
  double adjusted_level = 0.0;                                     // 1 - alpha / 2
};

/// Entrywise medians over splits, ignoring NaN cells.
inline SplitAggregate median_aggregate(std::span<const SplitEstimate> per_split, double alpha) {
  if (per_split.empty()) throw PreconditionError("median_aggregate: need at least one split");
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  const Eigen::Index r = per_split[0].estimates.rows(), c = per_split[0].estimates.cols();
  for (const auto& s : per_split)
    for (const auto* m : {&s.estimates, &s.lower, &s.upper, &s.p_values})
      if (m->rows() != r || m->cols() != c)
        throw DimensionError("median_aggregate: split grids are not aligned");
  auto med = [&](auto field) {
    Eigen::MatrixXd out(r, c);
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) {
        vals.clear();
        for (const auto& s : per_split) {
          const double x = (s.*field)(i, j);
          if (!std::isnan(x)) vals.push_back(x);
        }
        out(i, j) = vals.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::median(vals);
      }
    return out;
  };
  SplitAggregate a;
  a.splits = per_split.size();
  a.medians = med(&SplitEstimate::estimates);
  a.lower = med(&SplitEstimate::lower);
  a.upper = med(&SplitEstimate::upper);
  a.p_values = med(&SplitEstimate::p_values);
  a.significant = a.p_values.array() <= alpha / 2.0;
  a.adjusted_level = 1.0 - alpha / 2.0;
  return a;
}

}  // namespace hedonic

#endif  // HEDONIC_INFERENCE_HPP_
