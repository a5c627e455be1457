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

/*
 * @file market_data.hpp
 * @brief Transaction panel: ingestion, prices, match sets, turnover.
 *
 * A panel holds per (product, period) sales S and quantities Q. Prices are
 * derived as P = S / Q and are missing when nothing sold. Periods are kept
 * as a dense index [0, T); the original YYYYMM or integer labels are retained
 * for reporting. A built panel is immutable.
 */

#ifndef HEDONIC_MARKET_DATA_HPP_
#define HEDONIC_MARKET_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hedonic/detail/csv.hpp"
#include "hedonic/error.hpp"

namespace hedonic {

using ProductId = std::string;
using Period = int;

enum class InputFormat { csv, jsonl };

struct TransactionRecord {
  ProductId product_id;
  Period period = 0;
  double sales = 0.0;
  double quantity = 0.0;
};

/// S / Q when something sold, nothing otherwise.
inline std::optional<double> compute_price(const TransactionRecord& rec) {
  if (rec.quantity > 0.0) return rec.sales / rec.quantity;
  return std::nullopt;
}

/// One (product, period) cell of a panel, keyed by the dense product index.
struct PanelCell {
  std::size_t product = 0;
  double sales = 0.0;
  double quantity = 0.0;

  bool transacted() const { return quantity > 0.0; }
  std::optional<double> price() const {
    if (quantity > 0.0) return sales / quantity;
    return std::nullopt;
  }
};

struct DataQualityReport {
  std::size_t rows_read = 0;
  std::size_t duplicate_rows_merged = 0;
  std::size_t no_sale_cells = 0;
  /// Cells with Q > 0 but S = 0; kept with price 0.
  std::vector<std::pair<ProductId, Period>> zero_price_cells;
};

class TransactionPanel {
 public:
  TransactionPanel() = default;

  /// Aggregates duplicate (product, period) rows by summing sales and
  /// quantities, then validates. `labels`, when given, names each dense
  /// period; otherwise labels are the decimal period numbers. `periods`
  /// forces T (useful when trailing periods are empty); -1 infers it.
  static TransactionPanel from_records(std::vector<TransactionRecord> rows,
                                       std::vector<std::string> labels = {},
                                       int periods = -1) {
    TransactionPanel p;
    p.quality_.rows_read = rows.size();
    int max_t = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.product_id.empty())
        throw ValidationError("record " + std::to_string(i + 1) + ": empty product_id");
      if (r.period < 0)
        throw ValidationError("record " + std::to_string(i + 1) + ": negative period");
      if (!std::isfinite(r.sales) || !std::isfinite(r.quantity))
        throw ValidationError("record " + std::to_string(i + 1) + ": non-finite value");
      if (r.sales < 0.0)
        throw ValidationError("record " + std::to_string(i + 1) + ": negative sales for " +
                              r.product_id);
      if (r.quantity < 0.0)
        throw ValidationError("record " + std::to_string(i + 1) +
                              ": negative quantity for " + r.product_id);
      max_t = std::max(max_t, r.period);
    }
    p.periods_ = periods >= 0 ? periods : max_t + 1;
    if (max_t >= p.periods_)
      throw ValidationError("record period outside [0, " + std::to_string(p.periods_) + ")");

    std::map<std::pair<ProductId, Period>, std::pair<double, double>> agg;
    for (auto& r : rows) {
      auto [it, inserted] = agg.try_emplace({r.product_id, r.period}, r.sales, r.quantity);
      if (!inserted) {
        it->second.first += r.sales;
        it->second.second += r.quantity;
        ++p.quality_.duplicate_rows_merged;
      }
    }
    for (const auto& [key, sq] : agg) p.products_.push_back(key.first);
    std::sort(p.products_.begin(), p.products_.end());
    p.products_.erase(std::unique(p.products_.begin(), p.products_.end()), p.products_.end());
    for (std::size_t i = 0; i < p.products_.size(); ++i) p.index_.emplace(p.products_[i], i);

    p.cells_.assign(static_cast<std::size_t>(p.periods_), {});
    for (const auto& [key, sq] : agg) {
      const std::size_t idx = p.index_.at(key.first);
      p.cells_[static_cast<std::size_t>(key.second)].push_back({idx, sq.first, sq.second});
      if (sq.second == 0.0) ++p.quality_.no_sale_cells;
      if (sq.second > 0.0 && sq.first == 0.0) p.quality_.zero_price_cells.push_back(key);
      p.records_.push_back({key.first, key.second, sq.first, sq.second});
    }
    for (auto& col : p.cells_)
      std::sort(col.begin(), col.end(),
                [](const PanelCell& a, const PanelCell& b) { return a.product < b.product; });
    std::sort(p.records_.begin(), p.records_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.period, a.product_id) < std::tie(b.period, b.product_id);
    });

    if (labels.empty()) {
      for (int t = 0; t < p.periods_; ++t) labels.push_back(std::to_string(t));
    }
    if (static_cast<int>(labels.size()) != p.periods_)
      throw ValidationError("period label count does not match panel length");
    p.labels_ = std::move(labels);
    return p;
  }

  int periods() const { return periods_; }
  std::size_t product_count() const { return products_.size(); }
  const std::vector<ProductId>& products() const { return products_; }
  const ProductId& product_id(std::size_t i) const { return products_.at(i); }
  std::optional<std::size_t> product_index(const ProductId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<TransactionRecord>& records() const { return records_; }
  const std::string& period_label(Period t) const { return labels_.at(static_cast<std::size_t>(t)); }
  const std::vector<std::string>& period_labels() const { return labels_; }
  const DataQualityReport& quality() const { return quality_; }

  /// All cells recorded at t (including no-sale markers), sorted by product.
  std::span<const PanelCell> cells(Period t) const {
    check_period(t);
    return cells_[static_cast<std::size_t>(t)];
  }

  const PanelCell* find(std::size_t product, Period t) const {
    const auto col = cells(t);
    auto it = std::lower_bound(col.begin(), col.end(), product,
                               [](const PanelCell& c, std::size_t p) { return c.product < p; });
    if (it == col.end() || it->product != product) return nullptr;
    return &*it;
  }

  /// C_t: sorted indices of products with Q > 0 at t.
  std::vector<std::size_t> universe(Period t) const {
    std::vector<std::size_t> out;
    for (const auto& c : cells(t))
      if (c.transacted()) out.push_back(c.product);
    return out;
  }

  std::optional<double> price(std::size_t product, Period t) const {
    const PanelCell* c = find(product, t);
    return c ? c->price() : std::nullopt;
  }

  double quantity(std::size_t product, Period t) const {
    const PanelCell* c = find(product, t);
    return c ? c->quantity : 0.0;
  }

  void check_period(Period t) const {
    if (t < 0 || t >= periods_)
      throw PreconditionError("period " + std::to_string(t) + " outside [0, " +
                              std::to_string(periods_) + ")");
  }

 private:
  int periods_ = 0;
  std::vector<ProductId> products_;
  std::unordered_map<ProductId, std::size_t> index_;
  std::vector<std::vector<PanelCell>> cells_;
  std::vector<TransactionRecord> records_;
  std::vector<std::string> labels_;
  DataQualityReport quality_;
};

namespace detail {

struct RawRow {
  ProductId product;
  std::string period;
  double sales;
  double quantity;
  std::size_t line;
};

/// YYYYMM when every label is a six-digit year-month; plain integers
/// otherwise. Returns dense indices and the label of each dense period.
inline std::pair<std::vector<Period>, std::vector<std::string>> normalize_periods(
    const std::vector<RawRow>& rows) {
  std::vector<long long> values;
  values.reserve(rows.size());
  bool all_yyyymm = !rows.empty();
  for (const auto& r : rows) {
    auto v = parse_int(r.period);
    if (!v) throw ParseError("unparsable period '" + r.period + "'", r.line);
    if (*v < 0) throw ValidationError("line " + std::to_string(r.line) + ": negative period");
    const long long month = *v % 100;
    if (trim(r.period).size() != 6 || month < 1 || month > 12) all_yyyymm = false;
    values.push_back(*v);
  }
  std::vector<Period> dense(rows.size());
  std::vector<std::string> labels;
  if (rows.empty()) return {dense, labels};
  if (all_yyyymm) {
    auto to_month = [](long long v) { return (v / 100) * 12 + (v % 100 - 1); };
    long long lo = to_month(values[0]), hi = lo;
    for (long long v : values) {
      lo = std::min(lo, to_month(v));
      hi = std::max(hi, to_month(v));
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      dense[i] = static_cast<Period>(to_month(values[i]) - lo);
    for (long long m = lo; m <= hi; ++m) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%04lld%02lld", m / 12, m % 12 + 1);
      labels.emplace_back(buf);
    }
  } else {
    const long long lo = *std::min_element(values.begin(), values.end());
    const long long hi = *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i < rows.size(); ++i) dense[i] = static_cast<Period>(values[i] - lo);
    for (long long v = lo; v <= hi; ++v) labels.push_back(std::to_string(v));
  }
  return {dense, labels};
}

inline TransactionPanel build_from_raw(const std::vector<RawRow>& rows) {
  auto [dense, labels] = normalize_periods(rows);
  std::vector<TransactionRecord> recs;
  recs.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.sales < 0.0)
      throw ValidationError("line " + std::to_string(r.line) + ": negative sales");
    if (r.quantity < 0.0)
      throw ValidationError("line " + std::to_string(r.line) + ": negative quantity");
    recs.push_back({r.product, dense[i], r.sales, r.quantity});
  }
  return TransactionPanel::from_records(std::move(recs), std::move(labels),
                                        static_cast<int>(labels.size()));
}

inline std::string json_scalar_to_string(const nlohmann::json& v, std::size_t line,
                                          const char* key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("field '") + key + "' must be a string or integer", line);
}

inline double json_number(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    if (auto d = parse_double(it->get<std::string>())) return *d;
  }
  throw ParseError(std::string("field '") + key + "' is not a number", line);
}

}  // namespace detail

/// Reads `product_id,period,sales,quantity` rows (CSV with header, or one
/// JSON object per line) into a validated panel.
inline TransactionPanel ingest_transactions(std::istream& is, InputFormat format) {
  std::vector<detail::RawRow> rows;
  if (format == InputFormat::csv) {
    std::vector<std::string> rec;
    std::size_t line = 0;
    if (!detail::read_csv_record(is, rec, line)) throw ParseError("empty input", 1);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < rec.size(); ++i) col[std::string(detail::trim(rec[i]))] = i;
    for (const char* k : {"product_id", "period", "sales", "quantity"})
      if (!col.count(k)) throw ParseError(std::string("header lacks column '") + k + "'", 1);
    while (true) {
      const std::size_t start = line + 1;
      if (!detail::read_csv_record(is, rec, line)) break;
      if (rec.size() == 1 && detail::trim(rec[0]).empty()) continue;
      if (rec.size() != col.size())
        throw ParseError("expected " + std::to_string(col.size()) + " fields, got " +
                             std::to_string(rec.size()),
                         start);
      auto s = detail::parse_double(rec[col["sales"]]);
      auto q = detail::parse_double(rec[col["quantity"]]);
      if (!s) throw ParseError("unparsable sales '" + rec[col["sales"]] + "'", start);
      if (!q) throw ParseError("unparsable quantity '" + rec[col["quantity"]] + "'", start);
      std::string id(detail::trim(rec[col["product_id"]]));
      if (id.empty()) throw ParseError("empty product_id", start);
      rows.push_back({std::move(id), rec[col["period"]], *s, *q, start});
    }
  } else {
    std::string text;
    std::size_t line = 0;
    while (std::getline(is, text)) {
      ++line;
      if (detail::trim(text).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line);
      }
      if (!obj.is_object()) throw ParseError("expected a JSON object", line);
      for (const char* k : {"product_id", "period"})
        if (!obj.contains(k)) throw ParseError(std::string("missing field '") + k + "'", line);
      rows.push_back({detail::json_scalar_to_string(obj["product_id"], line, "product_id"),
                      detail::json_scalar_to_string(obj["period"], line, "period"),
                      detail::json_number(obj, "sales", line),
                      detail::json_number(obj, "quantity", line), line});
    }
  }
  return detail::build_from_raw(rows);
}

/// C_t ∩ C_{t-lag} as sorted product indices.
inline std::vector<std::size_t> match_set(const TransactionPanel& panel, Period t, int lag) {
  if (lag < 0 || t - lag < 0)
    throw PreconditionError("match_set: t - lag must be >= 0 (t=" + std::to_string(t) +
                            ", lag=" + std::to_string(lag) + ")");
  const auto a = panel.universe(t);
  if (lag == 0) return a;
  const auto b = panel.universe(t - lag);
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Share of C_t that did not transact at t - 1.
inline double turnover_rate(const TransactionPanel& panel, Period t) {
  if (t < 1) throw PreconditionError("turnover_rate requires t >= 1");
  const auto now = panel.universe(t);
  if (now.empty())
    throw UndefinedError("turnover_rate: no transacting products at period " +
                         std::to_string(t));
  const auto matched = match_set(panel, t, 1);
  return static_cast<double>(now.size() - matched.size()) / static_cast<double>(now.size());
}

/// |C_t| / |C_base|.
inline double growth_ratio(const TransactionPanel& panel, Period t, Period base) {
  const auto b = panel.universe(base);
  if (b.empty())
    throw UndefinedError("growth_ratio: empty base period " + std::to_string(base));
  return static_cast<double>(panel.universe(t).size()) / static_cast<double>(b.size());
}

/// Product catalog row; `image_features` is an externally supplied vector.
struct ProductCatalogEntry {
  ProductId product_id;
  std::string title;
  std::string description;
  std::vector<std::string> bullet_points;
  std::optional<std::vector<double>> image_features;
};

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<std::vector<double>> parse_features(std::string_view s, std::size_t line) {
  if (trim(s).empty()) return std::nullopt;
  std::vector<double> v;
  for (const auto& part : split(s, ';')) {
    auto d = parse_double(part);
    if (!d) throw ParseError("unparsable image feature '" + part + "'", line);
    v.push_back(*d);
  }
  return v;
}

}  // namespace detail

/// Reads `product_id,title,description,bullet_points,image_features`.
/// `image_dim` < 0 infers the dimension from the first row that has one.
inline std::vector<ProductCatalogEntry> ingest_catalog(std::istream& is, InputFormat format,
                                                       int image_dim = -1) {
  std::vector<ProductCatalogEntry> out;
  std::vector<std::size_t> lines;
  if (format == InputFormat::csv) {
    std::vector<std::string> rec;
    std::size_t line = 0;
    if (!detail::read_csv_record(is, rec, line)) throw ParseError("empty catalog", 1);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < rec.size(); ++i) col[std::string(detail::trim(rec[i]))] = i;
    for (const char* k : {"product_id", "title"})
      if (!col.count(k)) throw ParseError(std::string("catalog header lacks '") + k + "'", 1);
    auto field = [&](const char* k) -> std::string {
      auto it = col.find(k);
      return it == col.end() ? std::string() : rec[it->second];
    };
    while (true) {
      const std::size_t start = line + 1;
      if (!detail::read_csv_record(is, rec, line)) break;
      if (rec.size() == 1 && detail::trim(rec[0]).empty()) continue;
      if (rec.size() != col.size())
        throw ParseError("expected " + std::to_string(col.size()) + " fields, got " +
                             std::to_string(rec.size()),
                         start);
      ProductCatalogEntry e;
      e.product_id = std::string(detail::trim(field("product_id")));
      e.title = field("title");
      e.description = field("description");
      e.bullet_points = detail::split(field("bullet_points"), '|');
      e.image_features = detail::parse_features(field("image_features"), start);
      out.push_back(std::move(e));
      lines.push_back(start);
    }
  } else {
    std::string text;
    std::size_t line = 0;
    while (std::getline(is, text)) {
      ++line;
      if (detail::trim(text).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line);
      }
      ProductCatalogEntry e;
      e.product_id = detail::json_scalar_to_string(obj.value("product_id", nlohmann::json()),
                                                   line, "product_id");
      e.title = obj.value("title", "");
      e.description = obj.value("description", "");
      if (obj.contains("bullet_points")) {
        const auto& b = obj["bullet_points"];
        if (b.is_array())
          e.bullet_points = b.get<std::vector<std::string>>();
        else
          e.bullet_points = detail::split(b.get<std::string>(), '|');
      }
      if (obj.contains("image_features") && !obj["image_features"].is_null()) {
        const auto& f = obj["image_features"];
        if (f.is_array())
          e.image_features = f.get<std::vector<double>>();
        else
          e.image_features = detail::parse_features(f.get<std::string>(), line);
      }
      out.push_back(std::move(e));
      lines.push_back(line);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& e = out[i];
    const std::string where = "catalog line " + std::to_string(lines[i]) + ": ";
    if (detail::trim(e.title).empty()) throw ValidationError(where + "empty title");
    if (e.image_features) {
      if (image_dim < 0) image_dim = static_cast<int>(e.image_features->size());
      if (static_cast<int>(e.image_features->size()) != image_dim)
        throw ValidationError(where + "image_features has dimension " +
                              std::to_string(e.image_features->size()) + ", expected " +
                              std::to_string(image_dim));
      for (double v : *e.image_features)
        if (!std::isfinite(v)) throw ValidationError(where + "non-finite image feature");
    }
  }
  return out;
}

/// Writes `product_id,period,sales,quantity` using the panel's period
/// labels; doubles are written in shortest round-trip form.
inline void write_transactions_csv(std::ostream& os, const TransactionPanel& panel) {
  os << "product_id,period,sales,quantity\n";
  for (const auto& r : panel.records())
    os << detail::csv_escape(r.product_id) << ',' << panel.period_label(r.period) << ','
       << detail::format_double(r.sales) << ',' << detail::format_double(r.quantity) << '\n';
}

inline void write_catalog_csv(std::ostream& os, const std::vector<ProductCatalogEntry>& catalog) {
  os << "product_id,title,description,bullet_points,image_features\n";
  for (const auto& e : catalog) {
    std::string bullets, feats;
    for (std::size_t i = 0; i < e.bullet_points.size(); ++i)
      bullets += (i ? "|" : "") + e.bullet_points[i];
    if (e.image_features)
      for (std::size_t i = 0; i < e.image_features->size(); ++i)
        feats += (i ? ";" : "") + detail::format_double((*e.image_features)[i]);
    os << detail::csv_escape(e.product_id) << ',' << detail::csv_escape(e.title) << ','
       << detail::csv_escape(e.description) << ',' << detail::csv_escape(bullets) << ','
       << detail::csv_escape(feats) << '\n';
  }
}

}  // namespace hedonic

#endif  // HEDONIC_MARKET_DATA_HPP_
