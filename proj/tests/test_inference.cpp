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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hedonic/inference.hpp"
#include "hedonic/stats.hpp"
#include "support.hpp"

namespace hedonic {
namespace {

using testing::random_matrix;

OlsFit fixed_fit(Eigen::VectorXd theta, Eigen::MatrixXd cov) {
  OlsFit f;
  f.theta_hat = std::move(theta);
  f.covariance = std::move(cov);
  return f;
}

TEST(Ols, HandExample) {
  const auto f = ols(Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 4));
  EXPECT_NEAR(f.theta_hat(0), 3.0, 1e-14);
  EXPECT_NEAR(f.residual_variance, 2.0, 1e-14);  // (1 + 1) / (2 - 1)
}

TEST(Ols, ExactFitHasZeroCovariance) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd v = random_matrix(20, 3, rng);
  const Eigen::VectorXd y = v * Eigen::Vector3d(1, -2, 0.5);
  const auto f = ols(v, y);
  EXPECT_LT(f.residual_variance, 1e-28);
  EXPECT_LT(f.covariance.cwiseAbs().maxCoeff(), 1e-28);
}

TEST(Ols, Errors) {
  EXPECT_THROW(ols(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 2)), SingularDesignError);
  Eigen::MatrixXd v(4, 2);
  v << 1, 2, 2, 4, 3, 6, 4, 8;
  const Eigen::Vector4d y(1, 2, 3, 5);
  EXPECT_THROW(ols(v, y), SingularDesignError);
  OlsOptions opt;
  opt.ridge_fallback = 1e-6;
  const auto f = ols(v, y, opt);
  EXPECT_TRUE(f.ridge);
  EXPECT_TRUE(f.theta_hat.allFinite());
  EXPECT_THROW(ols(v, Eigen::Vector3d(1, 2, 3)), DimensionError);
}

TEST(Ols, MatchesNormalEquations) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 15 + rep, p = 1 + rep % 6;
    const Eigen::MatrixXd v = random_matrix(n, p, rng);
    const Eigen::VectorXd y = random_matrix(n, 1, rng, 3.0);
    const auto f = ols(v, y);
    // Oracle: Cholesky on the Gram matrix.
    const Eigen::MatrixXd g = v.transpose() * v;
    const Eigen::VectorXd th = g.llt().solve(v.transpose() * y);
    const double s2 = (y - v * th).squaredNorm() / static_cast<double>(n - p);
    const Eigen::MatrixXd cov = s2 * g.inverse();
    EXPECT_LT((f.theta_hat - th).norm() / th.norm(), 1e-8);
    EXPECT_LT((f.covariance - cov).norm() / cov.norm(), 1e-8);
  }
}

TEST(Ols, SandwichCovarianceMatchesFormula) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd v = random_matrix(30, 2, rng);
  const Eigen::VectorXd y = random_matrix(30, 1, rng);
  OlsOptions opt;
  opt.covariance = CovarianceKind::sandwich;
  const auto f = ols(v, y, opt);
  const Eigen::MatrixXd ginv = (v.transpose() * v).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (Eigen::Index i = 0; i < 30; ++i) meat += f.residuals(i) * f.residuals(i) * v.row(i).transpose() * v.row(i);
  EXPECT_LT((f.covariance - ginv * meat * ginv).norm(), 1e-12);
}

TEST(StandardError, Examples) {
  const auto id = fixed_fit(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  EXPECT_DOUBLE_EQ(standard_error(id, Eigen::Vector2d(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(standard_error(id, Eigen::Vector2d::Zero()), 0.0);
  const auto d = fixed_fit(Eigen::Vector2d::Zero(), Eigen::Vector2d(4, 9).asDiagonal());
  EXPECT_NEAR(standard_error(d, Eigen::Vector2d(1, 1)), std::sqrt(13.0), 1e-14);
  EXPECT_NEAR(standard_error(d, Eigen::Vector2d(1, 1)), 3.6056, 1e-4);
}

TEST(HedonicCi, Examples) {
  const auto f = fixed_fit(Eigen::VectorXd::Constant(1, 114.6), Eigen::MatrixXd::Constant(1, 1, 0.05 * 0.05));
  const auto ci = hedonic_ci(f, Eigen::VectorXd::Ones(1), 0.10);
  EXPECT_NEAR(std::round(ci.lower * 10) / 10, 114.5, 1e-9);
  EXPECT_NEAR(std::round(ci.upper * 10) / 10, 114.7, 1e-9);
  EXPECT_DOUBLE_EQ(ci.level, 0.9);

  const auto zero = fixed_fit(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Zero(1, 1));
  const auto z = hedonic_ci(zero, Eigen::VectorXd::Ones(1), 0.1);
  EXPECT_EQ(z.lower, 3.0);
  EXPECT_EQ(z.upper, 3.0);

  const auto unit = fixed_fit(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1));
  EXPECT_NEAR(hedonic_ci(unit, Eigen::VectorXd::Ones(1), 0.05).upper, 1.95996, 1e-5);
  EXPECT_THROW(hedonic_ci(unit, Eigen::VectorXd::Ones(1), 1.0), PreconditionError);
}

TEST(PredictiveCi, Examples) {
  const auto f = fixed_fit(Eigen::VectorXd::Constant(1, 114.6), Eigen::MatrixXd::Constant(1, 1, 0.05 * 0.05));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  // Half-width 12 at 90% means nu = 12 / z_.95.
  const double nu = 12.0 / stats::normal_quantile(0.95);
  EXPECT_NEAR(nu, 7.29, 0.01);
  const auto ci = predictive_ci(f, one, 0.1, nu * nu - 0.05 * 0.05);
  EXPECT_NEAR(ci.upper - ci.center, 12.0, 1e-9);
  EXPECT_NEAR(ci.lower, 102.6, 1e-9);
  EXPECT_EQ(ci.kind, IntervalKind::sale_price);

  const auto h = hedonic_ci(f, one, 0.1);
  const auto p0 = predictive_ci(f, one, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(p0.lower, h.lower);
  EXPECT_DOUBLE_EQ(p0.upper, h.upper);
  double prev = 0.0;
  for (double var : {0.0, 0.1, 1.0, 10.0}) {
    const auto c = predictive_ci(f, one, 0.1, var);
    EXPECT_GE(c.upper - c.lower, prev);
    EXPECT_LE(c.lower, h.lower);
    EXPECT_GE(c.upper, h.upper);
    prev = c.upper - c.lower;
  }
  EXPECT_THROW(predictive_ci(f, one, 0.1, -1.0), ValidationError);
}

TEST(HedonicCi, MonteCarloCoverage) {
  // Known theta, homoskedastic noise: the 90% interval for theta'v should
  // cover about 90% of the time.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> e(0.0, 2.0);
  const Eigen::Vector3d theta(1.0, -0.5, 2.0), v0(0.3, 1.0, -0.7);
  const Eigen::MatrixXd v = random_matrix(40, 3, rng);
  int covered = 0;
  const int reps = 600;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd y = v * theta;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += e(rng);
    const auto ci = hedonic_ci(ols(v, y), v0, 0.1);
    covered += ci.lower <= theta.dot(v0) && theta.dot(v0) <= ci.upper;
  }
  EXPECT_NEAR(static_cast<double>(covered) / reps, 0.9, 0.04);
}

TEST(Bonferroni, Examples) {
  auto f = fixed_fit(Eigen::Vector3d(0.0, 1.96, 10.0), Eigen::Matrix3d::Identity());
  const auto t = pvalues_bonferroni(f, 0.05);
  EXPECT_DOUBLE_EQ(t.p_values(0), 1.0);
  EXPECT_NEAR(t.p_values(1), 0.05, 1e-3);
  EXPECT_FALSE(t.significant[0]);
  EXPECT_FALSE(t.significant[1]);  // 0.05 > 0.05 / 3
  EXPECT_TRUE(t.significant[2]);
}

TEST(MedianAggregate, Examples) {
  auto one = [](double e, double l, double u, double p) {
    return SplitEstimate{Eigen::MatrixXd::Constant(1, 1, e), Eigen::MatrixXd::Constant(1, 1, l),
                         Eigen::MatrixXd::Constant(1, 1, u), Eigen::MatrixXd::Constant(1, 1, p)};
  };
  const std::vector<SplitEstimate> single{one(5, 4, 6, 0.2)};
  const auto s = median_aggregate(single, 0.1);
  EXPECT_EQ(s.medians(0, 0), 5);
  EXPECT_EQ(s.lower(0, 0), 4);
  EXPECT_EQ(s.upper(0, 0), 6);
  EXPECT_EQ(s.p_values(0, 0), 0.2);
  const std::vector<SplitEstimate> three{one(1, 0, 2, 0.01), one(2, 1, 3, 0.04), one(10, 2, 4, 0.5)};
  const auto a = median_aggregate(three, 0.1);
  EXPECT_EQ(a.medians(0, 0), 2);
  EXPECT_EQ(a.lower(0, 0), 1);
  EXPECT_EQ(a.upper(0, 0), 3);
  EXPECT_TRUE(a.significant(0, 0));  // median p 0.04 <= 0.05
  EXPECT_DOUBLE_EQ(a.adjusted_level, 0.95);
  std::vector<SplitEstimate> bad = three;
  bad[1].lower = Eigen::MatrixXd::Zero(2, 1);
  EXPECT_THROW(median_aggregate(bad, 0.1), DimensionError);
  auto nan = three;
  nan[2].estimates(0, 0) = std::nan("");
  EXPECT_DOUBLE_EQ(median_aggregate(nan, 0.1).medians(0, 0), 1.5);
}

TEST(OlsOnEmbeddings, UsesHoldoutPricesOnly) {
  const auto panel = TransactionPanel::from_records(
      {{"a", 0, 2, 1}, {"b", 0, 8, 2}, {"c", 0, 9, 1}, {"d", 0, 0, 0}, {"e", 0, 5, 1}});
  Eigen::MatrixXd v(5, 1);
  v << 1, 2, 3, 4, 5;
  const ValueEmbeddingTable table({"a", "b", "c", "d", "e"}, v, {"e"});
  const std::vector<ProductId> holdout{"a", "b", "c", "d"};
  const auto f = ols_on_embeddings(table, panel, 0, holdout);
  EXPECT_EQ(f.products, (std::vector<ProductId>{"a", "b", "c"}));
  // y = (2, 4, 9) on v = (1, 2, 3): theta = 37 / 14.
  EXPECT_NEAR(f.theta_hat(0), 37.0 / 14.0, 1e-14);
  const std::vector<ProductId> leak{"a", "e"};
  EXPECT_THROW(ols_on_embeddings(table, panel, 0, leak), PreconditionError);
}

TEST(Stats, MedianAndQuantile) {
  EXPECT_EQ(stats::median({3, 1, 2}), 2);
  EXPECT_EQ(stats::median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(stats::median({}), UndefinedError);
  EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963985, 1e-9);
  EXPECT_NEAR(stats::normal_quantile(0.95), 1.644853627, 1e-9);
  EXPECT_NEAR(stats::two_sided_normal_pvalue(1.959963985), 0.05, 1e-9);
}

TEST(Stats, RankSum) {
  const std::vector<double> hi{5, 6, 7, 8}, lo{1, 2, 3, 4};
  const auto r = stats::rank_sum_test(hi, lo);
  EXPECT_EQ(r.u, 16.0);
  EXPECT_LT(r.p_greater, 0.05);
  const std::vector<double> same{1, 1, 1};
  EXPECT_EQ(stats::rank_sum_test(same, same).p_greater, 0.5);
}

}  // namespace
}  // namespace hedonic
