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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hedonic/market_data.hpp"

namespace hedonic {
namespace {

TransactionPanel panel_from_csv(const std::string& text) {
  std::istringstream is(text);
  return ingest_transactions(is, InputFormat::csv);
}

TEST(ComputePrice, Examples) {
  EXPECT_DOUBLE_EQ(*compute_price({"a", 0, 97.0, 1.0}), 97.0);
  EXPECT_DOUBLE_EQ(*compute_price({"a", 0, 6.0, 2.0}), 3.0);
  EXPECT_FALSE(compute_price({"a", 0, 0.0, 0.0}).has_value());
}

TEST(Ingest, DuplicateRowsAreSummed) {
  const auto p = panel_from_csv("product_id,period,sales,quantity\np,0,2,1\np,0,4,1\n");
  ASSERT_EQ(p.records().size(), 1u);
  EXPECT_DOUBLE_EQ(p.records()[0].quantity, 2.0);
  EXPECT_DOUBLE_EQ(p.records()[0].sales, 6.0);
  EXPECT_DOUBLE_EQ(*p.price(0, 0), 3.0);
  EXPECT_EQ(p.quality().duplicate_rows_merged, 1u);
}

TEST(Ingest, NoSaleRowHasNoPrice) {
  const auto p = panel_from_csv("product_id,period,sales,quantity\np,0,0,0\nq,0,5,1\n");
  EXPECT_FALSE(p.price(*p.product_index("p"), 0).has_value());
  EXPECT_EQ(p.universe(0).size(), 1u);
  EXPECT_EQ(p.quality().no_sale_cells, 1u);
}

TEST(Ingest, NegativeQuantityIsValidationError) {
  EXPECT_THROW(panel_from_csv("product_id,period,sales,quantity\np,0,1,-1\n"), ValidationError);
  EXPECT_THROW(panel_from_csv("product_id,period,sales,quantity\np,0,-1,1\n"), ValidationError);
}

TEST(Ingest, MalformedRowReportsLine) {
  try {
    panel_from_csv("product_id,period,sales,quantity\np,0,1,1\np,0,abc,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Ingest, JsonlMatchesCsv) {
  std::istringstream js(
      "{\"product_id\":\"a\",\"period\":202001,\"sales\":10,\"quantity\":2}\n"
      "{\"product_id\":\"b\",\"period\":202003,\"sales\":3,\"quantity\":1}\n");
  const auto j = ingest_transactions(js, InputFormat::jsonl);
  const auto c = panel_from_csv("product_id,period,sales,quantity\na,202001,10,2\nb,202003,3,1\n");
  EXPECT_EQ(j.periods(), 3);
  EXPECT_EQ(c.periods(), 3);
  EXPECT_EQ(j.period_label(1), "202002");
  EXPECT_DOUBLE_EQ(*j.price(0, 0), *c.price(0, 0));
}

TEST(Ingest, YyyymmAcrossYearBoundaryIsDense) {
  const auto p = panel_from_csv("product_id,period,sales,quantity\na,201912,1,1\na,202001,1,1\n");
  EXPECT_EQ(p.periods(), 2);
  EXPECT_EQ(p.period_label(0), "201912");
  EXPECT_EQ(p.period_label(1), "202001");
}

TEST(Ingest, ZeroPriceCellsAreFlagged) {
  const auto p = panel_from_csv("product_id,period,sales,quantity\na,0,0,3\n");
  EXPECT_DOUBLE_EQ(*p.price(0, 0), 0.0);
  EXPECT_EQ(p.quality().zero_price_cells.size(), 1u);
}

TEST(Ingest, PermutationInvariant) {
  std::vector<std::string> rows;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i)
    rows.push_back("p" + std::to_string(i % 7) + "," + std::to_string(i % 5) + "," +
                   std::to_string(1 + i % 11) + "," + std::to_string(i % 3));
  auto build = [&](const std::vector<std::string>& rs) {
    std::string s = "product_id,period,sales,quantity\n";
    for (const auto& r : rs) s += r + "\n";
    return panel_from_csv(s);
  };
  const auto ref = build(rows);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto p = build(rows);
    ASSERT_EQ(p.records().size(), ref.records().size());
    for (std::size_t i = 0; i < p.records().size(); ++i) {
      EXPECT_EQ(p.records()[i].product_id, ref.records()[i].product_id);
      EXPECT_EQ(p.records()[i].period, ref.records()[i].period);
      EXPECT_EQ(p.records()[i].sales, ref.records()[i].sales);
      EXPECT_EQ(p.records()[i].quantity, ref.records()[i].quantity);
    }
  }
}

TEST(Aggregation, PriceIsSalesWeightedMeanOfRowPrices) {
  // Aggregated S/Q equals sum(q_k * p_k) / sum(q_k).
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> up(1.0, 50.0);
  std::uniform_int_distribution<int> uq(1, 9);
  for (int rep = 0; rep < 50; ++rep) {
    std::string csv = "product_id,period,sales,quantity\n";
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double price = up(rng);
      const int q = uq(rng);
      csv += "x,0," + detail::format_double(price * q) + "," + std::to_string(q) + "\n";
      num += price * q;
      den += q;
    }
    EXPECT_NEAR(*panel_from_csv(csv).price(0, 0), num / den, 1e-12 * num / den);
  }
}

class SmallPanel : public ::testing::Test {
 protected:
  // C_0 = {a,b}, C_1 = {a,b,c,d}, C_2 = {c}
  TransactionPanel p = panel_from_csv(
      "product_id,period,sales,quantity\n"
      "a,0,1,1\nb,0,1,1\n"
      "a,1,1,1\nb,1,1,1\nc,1,1,1\nd,1,1,1\n"
      "c,2,1,1\nb,2,0,0\n");
  std::vector<std::string> ids(const std::vector<std::size_t>& v) {
    std::vector<std::string> out;
    for (auto i : v) out.push_back(p.product_id(i));
    return out;
  }
};

TEST_F(SmallPanel, MatchSet) {
  EXPECT_EQ(ids(match_set(p, 2, 1)), (std::vector<std::string>{"c"}));
  EXPECT_EQ(ids(match_set(p, 2, 2)), (std::vector<std::string>{}));
  EXPECT_EQ(ids(match_set(p, 1, 0)), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_THROW(match_set(p, 1, 2), PreconditionError);
}

TEST_F(SmallPanel, MatchSetSubsetInvariant) {
  for (Period t = 0; t < p.periods(); ++t)
    for (int lag = 0; lag <= t; ++lag) {
      const auto m = match_set(p, t, lag);
      const auto a = p.universe(t), b = p.universe(t - lag);
      EXPECT_TRUE(std::includes(a.begin(), a.end(), m.begin(), m.end()));
      EXPECT_TRUE(std::includes(b.begin(), b.end(), m.begin(), m.end()));
    }
}

TEST_F(SmallPanel, Turnover) {
  EXPECT_DOUBLE_EQ(turnover_rate(p, 1), 0.5);
  EXPECT_DOUBLE_EQ(turnover_rate(p, 2), 0.0);
  EXPECT_THROW(turnover_rate(p, 0), PreconditionError);
  for (Period t = 1; t < p.periods(); ++t)
    EXPECT_DOUBLE_EQ(turnover_rate(p, t),
                     1.0 - static_cast<double>(match_set(p, t, 1).size()) / p.universe(t).size());
}

TEST(Turnover, FullAndEmpty) {
  const auto p = panel_from_csv("product_id,period,sales,quantity\na,0,1,1\nb,1,1,1\nc,2,0,0\n");
  EXPECT_DOUBLE_EQ(turnover_rate(p, 1), 1.0);
  EXPECT_THROW(turnover_rate(p, 2), UndefinedError);
}

TEST_F(SmallPanel, Growth) {
  EXPECT_DOUBLE_EQ(growth_ratio(p, 1, 0), 2.0);
  EXPECT_DOUBLE_EQ(growth_ratio(p, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(growth_ratio(p, 2, 0), 0.5);
}

TEST(Growth, ExamplesFromCounts) {
  std::string csv = "product_id,period,sales,quantity\n";
  for (int i = 0; i < 100; ++i) csv += "b" + std::to_string(i) + ",0,1,1\n";
  for (int i = 0; i < 150; ++i) csv += "c" + std::to_string(i) + ",1,1,1\n";
  csv += "z,2,0,0\n";
  const auto p = panel_from_csv(csv);
  EXPECT_DOUBLE_EQ(growth_ratio(p, 1, 0), 1.5);
  EXPECT_DOUBLE_EQ(growth_ratio(p, 2, 0), 0.0);
  EXPECT_THROW(growth_ratio(p, 0, 2), UndefinedError);
}

TEST(Catalog, CsvFields) {
  std::istringstream is(
      "product_id,title,description,bullet_points,image_features\n"
      "a,Red Dress,\"Long, red\",soft|warm,0.5;1.5\n"
      "b,Shirt,,,\n");
  const auto c = ingest_catalog(is, InputFormat::csv);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].description, "Long, red");
  EXPECT_EQ(c[0].bullet_points, (std::vector<std::string>{"soft", "warm"}));
  EXPECT_EQ(*c[0].image_features, (std::vector<double>{0.5, 1.5}));
  EXPECT_FALSE(c[1].image_features.has_value());
}

TEST(Catalog, Validation) {
  std::istringstream empty_title("product_id,title\na,\n");
  EXPECT_THROW(ingest_catalog(empty_title, InputFormat::csv), ValidationError);
  std::istringstream dims(
      "{\"product_id\":\"a\",\"title\":\"x\",\"image_features\":[1,2]}\n"
      "{\"product_id\":\"b\",\"title\":\"y\",\"image_features\":[1]}\n");
  EXPECT_THROW(ingest_catalog(dims, InputFormat::jsonl), ValidationError);
  std::istringstream configured("{\"product_id\":\"a\",\"title\":\"x\",\"image_features\":[1,2]}\n");
  EXPECT_THROW(ingest_catalog(configured, InputFormat::jsonl, 3), ValidationError);
}

TEST(Writers, TransactionsRoundTrip) {
  const auto p = panel_from_csv(
      "product_id,period,sales,quantity\na,202001,10.1,3\nb,202002,0.3333333333333333,1\nb,202001,0,0\n");
  std::ostringstream os;
  write_transactions_csv(os, p);
  const auto q = panel_from_csv(os.str());
  ASSERT_EQ(q.records().size(), p.records().size());
  for (std::size_t i = 0; i < p.records().size(); ++i) {
    EXPECT_EQ(q.records()[i].sales, p.records()[i].sales);
    EXPECT_EQ(q.records()[i].quantity, p.records()[i].quantity);
  }
  EXPECT_EQ(q.period_labels(), p.period_labels());
}

}  // namespace
}  // namespace hedonic
