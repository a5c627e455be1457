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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "hedonic/checkpoint.hpp"
#include "hedonic/synthgen.hpp"
#include "hedonic/trainer.hpp"

namespace hedonic {
namespace {

TransactionPanel one_stratum_panel(int n, int periods = 1) {
  std::vector<TransactionRecord> recs;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "p%03d", i);
    for (int t = 0; t < periods; ++t) recs.push_back({id, t, 10.0 + i, 1.0});
  }
  return TransactionPanel::from_records(std::move(recs));
}

/// One-hot attribute encoding; the true hedonic function of a linear market
/// is exactly linear in it.
FeatureMatrix onehot_features(const GeneratedPanel& g) {
  const int K = g.spec.attributes, L = g.spec.levels;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.attributes.rows(), K * L);
  std::vector<ProductId> ids;
  for (Eigen::Index i = 0; i < g.attributes.rows(); ++i) {
    ids.push_back(g.panel.product_id(static_cast<std::size_t>(i)));
    for (int k = 0; k < K; ++k) x(i, k * L + g.attributes(i, k)) = 1.0;
  }
  return FeatureMatrix(std::move(ids), std::move(x));
}

MarketSpec linear_market() {
  MarketSpec s;
  s.n_products = 150;
  s.periods = 4;
  s.turnover = 0.2;
  s.attributes = 3;
  s.levels = 3;
  s.inflation = {1.03};
  s.price_noise = 0.0;
  s.image_dim = 0;
  s.seed = 5;
  return s;
}

TEST(Split, AllTrain) {
  const auto p = one_stratum_panel(30);
  const auto s = split_stratified(p, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(s.train.size(), 30u);
  EXPECT_TRUE(s.validation.empty());
  EXPECT_TRUE(s.test.empty());
}

TEST(Split, ExactProportions) {
  const auto p = one_stratum_panel(100);
  const auto s = split_stratified(p, {0.7, 0.15, 0.15}, 1);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.validation.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
  const auto again = split_stratified(p, {0.7, 0.15, 0.15}, 1);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
  EXPECT_NE(split_stratified(p, {0.7, 0.15, 0.15}, 2).train, s.train);
}

TEST(Split, InvalidFractions) {
  const auto p = one_stratum_panel(10);
  EXPECT_THROW(split_stratified(p, {0.5, 0.2, 0.2}, 1), PreconditionError);
  EXPECT_THROW(split_stratified(p, {1.2, -0.2, 0.0}, 1), PreconditionError);
}

TEST(Split, StratifiedDisjointCover) {
  const auto g = generate_panel([] {
    MarketSpec s;
    s.n_products = 80;
    s.periods = 6;
    s.turnover = 0.15;
    s.no_sale_rate = 0.1;
    s.seed = 3;
    return s;
  }());
  const auto s = split_stratified(g.panel, {0.6, 0.2, 0.2}, 11);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  const auto usable = usable_products(g.panel);
  ASSERT_EQ(all.size(), usable.size());
  std::map<Period, std::array<int, 3>> counts;
  std::map<Period, int> sizes;
  std::map<std::size_t, Period> first;
  for (auto [i, t] : usable) first[i] = t, ++sizes[t];
  for (auto i : s.train) ++counts[first[i]][0];
  for (auto i : s.validation) ++counts[first[i]][1];
  for (auto i : s.test) ++counts[first[i]][2];
  const std::array<double, 3> f{0.6, 0.2, 0.2};
  for (auto& [t, c] : counts)
    for (int k = 0; k < 3; ++k) EXPECT_LE(std::fabs(c[k] - f[k] * sizes[t]), 1.0) << "stratum " << t;
}

TEST(Split, TinyStratumFallsBackWithWarning) {
  std::vector<TransactionRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back({"a" + std::to_string(i), 0, 5.0, 1.0});
  recs.push_back({"late", 1, 5.0, 1.0});
  const auto p = TransactionPanel::from_records(std::move(recs));
  const auto s = split_stratified(p, {0.5, 0.25, 0.25}, 3);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), 21u);
}

TEST(RSquared, Examples) {
  Eigen::MatrixXd actual(4, 2);
  actual << 1, 5, 2, 5, 3, 5, 4, 5;
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(4, 2);
  const auto perfect = r_squared(actual, actual, w);
  EXPECT_DOUBLE_EQ(*perfect.per_period[0], 1.0);
  EXPECT_FALSE(perfect.per_period[1].has_value());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Constant(4, 2, 2.5);
  EXPECT_NEAR(*r_squared(mean, actual, w).per_period[0], 0.0, 1e-15);
  Eigen::MatrixXd bad = actual;
  bad.col(0) << 4, 3, 2, 1;
  EXPECT_LT(*r_squared(bad, actual, w).per_period[0], 0.0);
  Eigen::MatrixXd w1 = w;
  w1.col(0) << 1, 0, 0, 0;
  EXPECT_FALSE(r_squared(actual, actual, w1).per_period[0].has_value());
  EXPECT_THROW(r_squared(actual, actual, Eigen::MatrixXd::Ones(3, 2)), DimensionError);
}

TEST(TrainingConfig, JsonRoundTrip) {
  TrainingConfig c;
  c.adam.learning_rate = 0.02;
  c.epochs = 7;
  c.smoothness = 0.5;
  c.transform = PriceTransform::log;
  c.seed = 99;
  const auto d = TrainingConfig::from_json(c.to_json());
  EXPECT_EQ(d.adam.learning_rate, 0.02);
  EXPECT_EQ(d.epochs, 7);
  EXPECT_EQ(d.smoothness, 0.5);
  EXPECT_EQ(d.transform, PriceTransform::log);
  EXPECT_EQ(d.seed, 99u);
  c.adam.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

class LinearMarket : public ::testing::Test {
 protected:
  GeneratedPanel g = generate_panel(linear_market());
  FeatureMatrix x = onehot_features(g);
  DataSplit split = split_stratified(g.panel, {0.7, 0.15, 0.15}, 4);
  NetworkConfig net{{9, 9}, {Activation::linear}, 4, {}};
  TrainingConfig cfg = [] {
    TrainingConfig c;
    c.epochs = 150;
    c.adam.learning_rate = 0.01;
    c.batch_size = 32;
    c.seed = 2;
    return c;
  }();

  double holdout_r2(const NetworkParams& p) {
    const auto m = panel_matrices(g.panel, split.test, PriceTransform::identity, false);
    std::vector<ProductId> ids;
    for (auto i : split.test) ids.push_back(g.panel.product_id(i));
    const Eigen::MatrixXd pred = predict_prices(p, x.gather(ids));
    return *r_squared(pred, m.prices.array().isNaN().select(0.0, m.prices), m.weights).pooled;
  }
};

TEST_F(LinearMarket, NoiselessLinearPricesAreLearned) {
  const auto r = train(g.panel, x, split, net, cfg);
  EXPECT_GE(holdout_r2(r.params), 0.99);
  EXPECT_EQ(r.curve.size(), 150u);
  EXPECT_EQ(r.trained_on.size(), split.train.size());
  EXPECT_LE(r.best_epoch, 149);
}

TEST_F(LinearMarket, LargeSmoothnessFlattensPaths) {
  auto mean_step = [&](const NetworkParams& p) {
    const Eigen::MatrixXd pred = predict_prices(p, x.values());
    return (pred.rightCols(3) - pred.leftCols(3)).cwiseAbs().mean();
  };
  cfg.epochs = 60;
  const auto free = train(g.panel, x, split, net, cfg);
  cfg.smoothness = 1e4;
  const auto flat = train(g.panel, x, split, net, cfg);
  EXPECT_LT(mean_step(flat.params), mean_step(free.params));
}

TEST_F(LinearMarket, FixedSeedGivesIdenticalCheckpoint) {
  cfg.epochs = 10;
  auto bytes = [&] {
    std::ostringstream os;
    write_checkpoint(os, {train(g.panel, x, split, net, cfg).params, {}});
    return os.str();
  };
  EXPECT_EQ(bytes(), bytes());
}

TEST_F(LinearMarket, PeriodMismatchIsRejected) {
  net.periods = 3;
  EXPECT_THROW(train(g.panel, x, split, net, cfg), DimensionError);
}

TEST_F(LinearMarket, SingleTaskBaselineHasOneModelPerPeriod) {
  cfg.epochs = 5;
  const auto models = train_single_task(g.panel, x, split, net, cfg);
  ASSERT_EQ(models.size(), 4u);
  for (const auto& m : models) {
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->params.config.periods, 1);
  }
}

TEST(ValueEmbeddings, IdentityTrunk) {
  NetworkConfig c{{3, 3}, {Activation::linear}, 2, {}};
  auto p = init_params(c, 1);
  p.weights[0].setIdentity();
  Eigen::MatrixXd v(2, 3);
  v << 1, 2, 3, -4, 5, 0.5;
  const FeatureMatrix fm({"a", "b"}, v);
  const std::vector<ProductId> ids{"b", "a"};
  const auto t = extract_value_embeddings(p, fm, ids, {"a"});
  EXPECT_EQ(t.lookup("a"), Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(t.lookup("b"), Eigen::Vector3d(-4, 5, 0.5));
  EXPECT_TRUE(t.was_trained_on("a"));
  EXPECT_FALSE(t.was_trained_on("b"));
  EXPECT_THROW(t.lookup("zz"), LookupError);
  EXPECT_EQ(extract_value_embeddings(p, fm, ids).values(), t.values());
  const std::vector<ProductId> unknown{"q"};
  EXPECT_THROW(extract_value_embeddings(p, fm, unknown), LookupError);
}

TEST(FeatureMatrix, Validation) {
  EXPECT_THROW(FeatureMatrix({"a", "a"}, Eigen::MatrixXd::Zero(2, 1)), ValidationError);
  EXPECT_THROW(FeatureMatrix({"a"}, Eigen::MatrixXd::Zero(2, 1)), DimensionError);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Zero(1, 1);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(FeatureMatrix({"a"}, nan), ValidationError);
}

}  // namespace
}  // namespace hedonic
