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
#include <sstream>

#include <gtest/gtest.h>

#include "hedonic/features.hpp"
#include "hedonic/synthgen.hpp"

namespace hedonic {
namespace {

MarketSpec small_spec() {
  MarketSpec s;
  s.n_products = 60;
  s.periods = 14;
  s.turnover = 0.1;
  s.attributes = 3;
  s.levels = 3;
  s.image_dim = 4;
  s.seed = 21;
  return s;
}

TEST(MarketSpec, JsonRoundTripAndValidation) {
  auto s = small_spec();
  s.truth = TruthShape::nonlinear;
  s.inflation = std::vector<double>(14, 1.01);
  s.reference_elasticity = 0.5;
  const auto j = s.to_json();
  EXPECT_EQ(MarketSpec::from_json(j).to_json(), j);
  s.turnover = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = small_spec();
  s.inflation = {1.0, 1.0};
  EXPECT_THROW(s.validate(), ValidationError);
  s.inflation = {0.0};
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Generate, NoiselessLinearPricesEqualTruth) {
  auto s = small_spec();
  s.inflation = {1.02};
  const auto g = generate_panel(s);
  ASSERT_EQ(g.truth.values.rows(), static_cast<Eigen::Index>(g.panel.product_count()));
  std::size_t checked = 0;
  for (std::size_t i = 0; i < g.panel.product_count(); ++i)
    for (Period t = 0; t < g.panel.periods(); ++t)
      if (auto p = g.panel.price(i, t)) {
        EXPECT_NEAR(*p, g.truth.at(i, t), 1e-12 * g.truth.at(i, t));
        ++checked;
      }
  EXPECT_GT(checked, 60u * 14u - 1);
  EXPECT_TRUE(g.truth.values.allFinite());
}

TEST(Generate, SameSeedSamePanel) {
  const auto a = generate_panel(small_spec());
  const auto b = generate_panel(small_spec());
  std::ostringstream ta, tb, ca, cb;
  write_transactions_csv(ta, a.panel);
  write_transactions_csv(tb, b.panel);
  write_catalog_csv(ca, a.catalog);
  write_catalog_csv(cb, b.catalog);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(ca.str(), cb.str());
  auto other = small_spec();
  other.seed = 22;
  std::ostringstream tc;
  write_transactions_csv(tc, generate_panel(other).panel);
  EXPECT_NE(ta.str(), tc.str());
}

TEST(Generate, ExactTurnover) {
  auto s = small_spec();
  s.turnover = 0.0;
  const auto flat = generate_panel(s);
  for (Period t = 1; t < flat.panel.periods(); ++t) EXPECT_EQ(flat.panel.universe(t), flat.panel.universe(0));
  const auto g = generate_panel(small_spec());
  for (Period t = 1; t < g.panel.periods(); ++t) {
    EXPECT_EQ(g.panel.universe(t).size(), 60u);
    EXPECT_DOUBLE_EQ(turnover_rate(g.panel, t), 6.0 / 60.0);
  }
}

TEST(Generate, TextCarriesAttributeWords) {
  const auto g = generate_panel(small_spec());
  for (std::size_t i = 0; i < g.catalog.size(); ++i) {
    const auto title = tokenize(g.catalog[i].title);
    ASSERT_EQ(title.size(), 3u);
    for (int k = 0; k < 3; ++k) {
      const auto& syn = g.bucket_words[k][g.attributes(static_cast<Eigen::Index>(i), k)];
      EXPECT_NE(std::find(syn.begin(), syn.end(), title[k]), syn.end());
      for (const auto& w : syn) EXPECT_NE(g.catalog[i].description.find(w), std::string::npos);
    }
    EXPECT_EQ(g.catalog[i].image_features->size(), 4u);
  }
}

TEST(Generate, FeasibilityWarning) {
  auto s = small_spec();
  s.n_products = 10;
  s.turnover = 0.5;
  EXPECT_FALSE(generate_panel(s).warnings.empty());
  EXPECT_TRUE(generate_panel(small_spec()).warnings.empty());
}

TEST(TrueIndex, UniformInflationAnyTurnover) {
  auto s = small_spec();
  s.inflation = {1.02};
  s.turnover = 0.3;
  s.price_noise = 0.2;
  const auto g = generate_panel(s);
  for (Period t = 1; t < g.panel.periods(); ++t)
    for (auto f : {Formula::laspeyres, Formula::paasche, Formula::fisher})
      EXPECT_NEAR(true_index(g, t, 1, f), 1.02, 1e-12);
  EXPECT_NEAR(true_index(g, 13, 12, Formula::fisher), std::pow(1.02, 12), 1e-12);
}

TEST(TrueIndex, NoiseDoesNotMoveTruth) {
  auto s = small_spec();
  s.truth = TruthShape::nonlinear;
  s.interaction = 0.4;
  s.coefficient_drift = 0.05;
  const auto a = generate_panel(s);
  s.price_noise = 0.3;
  const auto b = generate_panel(s);
  EXPECT_EQ(a.truth.values, b.truth.values);
}

TEST(TrueIndex, HandBuiltTwoProductExample) {
  GeneratedPanel g;
  g.panel = TransactionPanel::from_records({{"a", 0, 1, 1}, {"a", 1, 2, 1}, {"b", 0, 1, 1}, {"b", 1, 3, 3}});
  g.truth.values.resize(2, 2);
  g.truth.values << 1, 2, 1, 1;
  EXPECT_NEAR(true_index(g, 1, 1, Formula::fisher), 1.36931, 1e-5);
}

TEST(TrueIndex, MatchedEqualsHedonicWithoutTurnoverOrNoise) {
  auto s = small_spec();
  s.turnover = 0.0;
  s.inflation = {1.01};
  s.coefficient_drift = 0.1;
  const auto g = generate_panel(s);
  for (Period t = 1; t < g.panel.periods(); ++t)
    EXPECT_NEAR(true_index(g, t, 1, Formula::fisher), bilateral_matched(g.panel, t, 1, Formula::fisher), 1e-12);
}

TEST(Drift, NoNoiseNoDrift) {
  auto s = small_spec();
  s.periods = 25;
  const auto r = drift_experiment(s, 3);
  EXPECT_EQ(r.horizon, 24);
  for (double m : r.monthly) EXPECT_LT(m, 1e-12);
  for (double y : r.yearly) EXPECT_LT(y, 1e-12);
}

TEST(Drift, ReproducibleAcrossRunsAndThreads) {
  auto s = small_spec();
  s.periods = 13;
  s.price_noise = 0.2;
  s.reference_elasticity = 0.5;
  const auto a = drift_experiment(s, 4, 1);
  const auto b = drift_experiment(s, 4, 3);
  EXPECT_EQ(a.monthly, b.monthly);
  EXPECT_EQ(a.yearly, b.yearly);
  s.inflation = {1.01};
  EXPECT_THROW(drift_experiment(s, 1), PreconditionError);
  s.inflation = {1.0};
  s.periods = 12;
  EXPECT_THROW(drift_experiment(s, 1), PreconditionError);
}

TEST(Features, LayoutAndDeterminism) {
  const auto g = generate_panel(small_spec());
  const auto corpus = catalog_corpus(g.catalog);
  const auto vocab = build_vocab(corpus, 1);
  Word2VecConfig wc;
  wc.dim = 5;
  wc.epochs = 2;
  const auto w = train_word2vec(encode_corpus(vocab, corpus), vocab.size(), wc);
  FeatureConfig fc;
  fc.title_words = 3;
  const auto x = build_features(g.catalog, w.omega, vocab, fc);
  EXPECT_EQ(x.width(), 5 * 3 + 5 + 4);
  EXPECT_EQ(x.values().rows(), static_cast<Eigen::Index>(g.catalog.size()));
  // Title block equals the concatenated title embeddings.
  const auto first = concat_embedding(w.omega, vocab.encode(g.catalog[0].title), 3);
  EXPECT_EQ(x.values().row(0).head(15).transpose(), first);
  EXPECT_EQ(x.values()(0, 20), (*g.catalog[0].image_features)[0]);
  fc.images = false;
  fc.description = false;
  EXPECT_EQ(build_features(g.catalog, w.omega, vocab, fc).width(), 15);
  EXPECT_EQ(FeatureConfig::from_json(fc.to_json()).title_words, 3u);
}

}  // namespace
}  // namespace hedonic
