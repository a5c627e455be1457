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

#ifndef HEDONIC_PIPELINE_HPP_
#define HEDONIC_PIPELINE_HPP_

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "hedonic/checkpoint.hpp"
#include "hedonic/detail/csv.hpp"
#include "hedonic/detail/parallel.hpp"
#include "hedonic/error.hpp"
#include "hedonic/features.hpp"
#include "hedonic/indices.hpp"
#include "hedonic/inference.hpp"
#include "hedonic/market_data.hpp"
#include "hedonic/network.hpp"
#include "hedonic/svg.hpp"
#include "hedonic/synthgen.hpp"
#include "hedonic/trainer.hpp"
#include "hedonic/vocabulary.hpp"
#include "hedonic/word2vec.hpp"

/*
 * Stage orchestration over one output directory:
 *
 *   simulate -> ingest -> embed -> train -> infer -> index -> report
 *
 * Stages communicate only through files in the output directory. Each stage
 * records a key (digest of its config section, seed, thread count and input
 * files) and the digests of its outputs in manifest.json; a stage whose key
 * and outputs are unchanged is skipped.
 */
namespace hedonic::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

struct Paths {
  std::string transactions;  // empty with a synthetic block: <out>/transactions.csv
  std::string catalog;
  std::string output_dir = "out";
  InputFormat transactions_format = InputFormat::csv;
  InputFormat catalog_format = InputFormat::csv;
};

struct EmbeddingSettings {
  Word2VecConfig word2vec;
  std::size_t min_count = 1;
  FeatureConfig features;
};

struct NetworkSettings {
  std::vector<int> hidden{128, 64, 32};
  std::vector<Activation> activations{Activation::relu, Activation::relu, Activation::relu};
  std::vector<double> dropout;
};

struct TrainingSettings {
  TrainingConfig config;
  std::array<double, 3> split{0.7, 0.15, 0.15};
};

struct IndexSettings {
  std::vector<int> lags{1, 12};
  std::vector<IndexKind> kinds{IndexKind::matched_F, IndexKind::hedonic_F, IndexKind::jevons};
  Period base = 0;
  bool combine = true;  // sqrt(monthly * yearly) hedonic Fisher
};

struct InferenceSettings {
  double alpha = 0.1;
  int splits = 1;
  CovarianceKind covariance = CovarianceKind::homoskedastic;
  std::optional<double> ridge_fallback;
};

struct PipelineConfig {
  Paths paths;
  std::optional<MarketSpec> synthetic;
  EmbeddingSettings embedding;
  NetworkSettings network;
  TrainingSettings training;
  IndexSettings index;
  InferenceSettings inference;
  std::uint64_t seed = 1;
  /// Directory relative paths are resolved against; not serialized.
  fs::path base_dir = ".";

  fs::path resolve(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  }
  fs::path output_dir() const { return resolve(paths.output_dir); }
  fs::path transactions_path() const {
    if (paths.transactions.empty()) {
      if (!synthetic) throw ValidationError("config: paths.transactions is required");
      return output_dir() / "transactions.csv";
    }
    return resolve(paths.transactions);
  }
  fs::path catalog_path() const {
    if (paths.catalog.empty()) {
      if (!synthetic) throw ValidationError("config: paths.catalog is required");
      return output_dir() / "catalog.csv";
    }
    return resolve(paths.catalog);
  }

  /// Word2Vec, split, training and the synthetic market all take the master
  /// seed.
  void apply_seed() {
    embedding.word2vec.seed = seed;
    training.config.seed = seed;
    if (synthetic) synthetic->seed = seed;
  }

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j, fs::path base_dir = ".");
};

namespace detail {

inline std::string format_name(InputFormat f) { return f == InputFormat::csv ? "csv" : "jsonl"; }

inline InputFormat format_from_name(const std::string& s) {
  if (s == "csv") return InputFormat::csv;
  if (s == "jsonl") return InputFormat::jsonl;
  throw ValidationError("unknown input format '" + s + "'");
}

inline std::string covariance_name(CovarianceKind k) {
  return k == CovarianceKind::homoskedastic ? "homoskedastic" : "sandwich";
}

}  // namespace detail

inline nlohmann::json PipelineConfig::to_json() const {
  using nlohmann::json;
  json j;
  j["seed"] = seed;
  j["paths"] = {{"transactions", paths.transactions},
                {"catalog", paths.catalog},
                {"output_dir", paths.output_dir},
                {"transactions_format", detail::format_name(paths.transactions_format)},
                {"catalog_format", detail::format_name(paths.catalog_format)}};
  if (synthetic) {
    json s = synthetic->to_json();
    s.erase("seed");
    j["synthetic"] = s;
  }
  const auto& w = embedding.word2vec;
  j["embedding"] = {{"dim", w.dim},
                    {"window", w.window},
                    {"epochs", w.epochs},
                    {"learning_rate", w.learning_rate},
                    {"batch_size", w.batch_size},
                    {"init_scale", w.init_scale},
                    {"min_count", embedding.min_count},
                    {"features", embedding.features.to_json()}};
  std::vector<std::string> acts;
  for (auto a : network.activations) acts.push_back(to_string(a));
  j["network"] = {{"hidden", network.hidden}, {"activations", acts}, {"dropout", network.dropout}};
  json t = training.config.to_json();
  t.erase("seed");
  t["split"] = training.split;
  j["training"] = t;
  std::vector<std::string> kinds;
  for (auto k : index.kinds) kinds.push_back(to_string(k));
  j["index"] = {{"lags", index.lags}, {"kinds", kinds}, {"base", index.base}, {"combine", index.combine}};
  j["inference"] = {{"alpha", inference.alpha},
                    {"splits", inference.splits},
                    {"covariance", detail::covariance_name(inference.covariance)},
                    {"ridge_fallback", inference.ridge_fallback ? json(*inference.ridge_fallback) : json(nullptr)}};
  return j;
}

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, fs::path base_dir) {
  PipelineConfig c;
  c.base_dir = std::move(base_dir);
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      c.paths.transactions = p.value("transactions", "");
      c.paths.catalog = p.value("catalog", "");
      c.paths.output_dir = p.value("output_dir", c.paths.output_dir);
      c.paths.transactions_format = detail::format_from_name(p.value("transactions_format", "csv"));
      c.paths.catalog_format = detail::format_from_name(p.value("catalog_format", "csv"));
    }
    if (j.contains("synthetic")) c.synthetic = MarketSpec::from_json(j["synthetic"]);
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      auto& w = c.embedding.word2vec;
      w.dim = e.value("dim", w.dim);
      w.window = e.value("window", w.window);
      w.epochs = e.value("epochs", w.epochs);
      w.learning_rate = e.value("learning_rate", w.learning_rate);
      w.batch_size = e.value("batch_size", w.batch_size);
      w.init_scale = e.value("init_scale", w.init_scale);
      c.embedding.min_count = e.value("min_count", c.embedding.min_count);
      if (e.contains("features")) c.embedding.features = FeatureConfig::from_json(e["features"]);
    }
    if (j.contains("network")) {
      const auto& n = j["network"];
      if (n.contains("hidden")) c.network.hidden = n["hidden"].get<std::vector<int>>();
      if (n.contains("activations")) {
        c.network.activations.clear();
        for (const auto& a : n["activations"]) c.network.activations.push_back(activation_from_string(a.get<std::string>()));
      } else {
        c.network.activations.assign(c.network.hidden.size(), Activation::relu);
      }
      if (n.contains("dropout")) c.network.dropout = n["dropout"].get<std::vector<double>>();
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      c.training.config = TrainingConfig::from_json(t);
      if (t.contains("split")) c.training.split = t["split"].get<std::array<double, 3>>();
    }
    if (j.contains("index")) {
      const auto& x = j["index"];
      if (x.contains("lags")) c.index.lags = x["lags"].get<std::vector<int>>();
      if (x.contains("kinds")) {
        c.index.kinds.clear();
        for (const auto& k : x["kinds"]) c.index.kinds.push_back(index_kind_from_string(k.get<std::string>()));
      }
      c.index.base = x.value("base", c.index.base);
      c.index.combine = x.value("combine", c.index.combine);
    }
    if (j.contains("inference")) {
      const auto& f = j["inference"];
      c.inference.alpha = f.value("alpha", c.inference.alpha);
      c.inference.splits = f.value("splits", c.inference.splits);
      const std::string cov = f.value("covariance", "homoskedastic");
      if (cov == "homoskedastic")
        c.inference.covariance = CovarianceKind::homoskedastic;
      else if (cov == "sandwich")
        c.inference.covariance = CovarianceKind::sandwich;
      else
        throw ValidationError("unknown covariance '" + cov + "'");
      if (f.contains("ridge_fallback") && !f["ridge_fallback"].is_null())
        c.inference.ridge_fallback = f["ridge_fallback"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.network.activations.size() != c.network.hidden.size())
    throw ValidationError("config: network.activations needs one entry per hidden layer");
  if (!(c.inference.alpha > 0.0 && c.inference.alpha < 1.0))
    throw ValidationError("config: inference.alpha must lie in (0,1)");
  if (c.inference.splits < 1) throw ValidationError("config: inference.splits must be >= 1");
  for (int l : c.index.lags)
    if (l < 1) throw ValidationError("config: index lags must be >= 1");
  c.apply_seed();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), 0);
  }
  return PipelineConfig::from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------- files

inline std::string sha256_bytes(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_bytes(read_file(p)); }

inline void write_file(const fs::path& p, const std::string& data) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + p.string());
  os << data;
  if (!os) throw Error("failed writing " + p.string());
}

/// Exclusive lock on an output directory for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".hedonic.lock") {
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f) throw Error("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

// ---------------------------------------------------------------- run context

class Run {
 public:
  Run(PipelineConfig cfg, std::ostream& log = std::cerr)
      : cfg_(std::move(cfg)), log_(log), out_(cfg_.output_dir()) {
    fs::create_directories(out_);
    lock_.emplace(out_);
    threads_ = hedonic::detail::env_thread_count();
    cfg_.embedding.word2vec.threads = threads_;
    cfg_.training.config.threads = threads_;
    const fs::path m = out_ / "manifest.json";
    if (fs::exists(m)) {
      try {
        manifest_ = nlohmann::json::parse(read_file(m));
      } catch (const nlohmann::json::exception&) {
        manifest_ = nlohmann::json::object();
      }
    }
    if (!manifest_.is_object()) manifest_ = nlohmann::json::object();
    manifest_["config"] = cfg_.to_json();
    manifest_["config_sha256"] = sha256_bytes(cfg_.to_json().dump());
    manifest_["seed"] = cfg_.seed;
    manifest_["threads"] = threads_;
    save_manifest();
  }

  const PipelineConfig& config() const { return cfg_; }
  const fs::path& out() const { return out_; }
  std::size_t threads() const { return threads_; }
  std::ostream& log() { return log_; }
  const nlohmann::json& manifest() const { return manifest_; }

  /// Runs `body` unless the stage's recorded key and outputs still match.
  /// `inputs` are files read by the stage; `outputs` are names inside the
  /// output directory. `body` may append warnings.
  template <typename Body>
  bool stage(const std::string& name, const nlohmann::json& section, const std::vector<fs::path>& inputs,
             const std::vector<std::string>& outputs, Body body) {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& p : inputs) {
      if (!fs::exists(p)) throw Error(name + ": missing input " + p.string());
      in[p.filename().string()] = sha256_file(p);
    }
    const nlohmann::json keyed = {{"stage", name}, {"section", section}, {"seed", cfg_.seed},
                                  {"threads", threads_}, {"inputs", in}};
    const std::string key = sha256_bytes(keyed.dump());
    auto& st = manifest_["stages"][name];
    if (st.is_object() && st.value("key", "") == key && outputs_match(st)) {
      log_ << "[" << name << "] up to date\n";
      return false;
    }
    log_ << "[" << name << "] running\n";
    std::vector<std::string> warnings;
    body(warnings);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& o : outputs) {
      const fs::path p = out_ / o;
      if (!fs::exists(p)) throw Error(name + ": stage did not produce " + o);
      out[o] = sha256_file(p);
    }
    for (const auto& w : warnings) log_ << "[" << name << "] warning: " << w << "\n";
    manifest_["stages"][name] = {{"key", key}, {"inputs", in}, {"outputs", out}, {"warnings", warnings}};
    save_manifest();
    return true;
  }

 private:
  bool outputs_match(const nlohmann::json& st) const {
    if (!st.contains("outputs")) return false;
    for (const auto& [file, digest] : st["outputs"].items()) {
      const fs::path p = out_ / file;
      if (!fs::exists(p) || sha256_file(p) != digest.get<std::string>()) return false;
    }
    return true;
  }

  void save_manifest() { write_file(out_ / "manifest.json", manifest_.dump(2) + "\n"); }

  PipelineConfig cfg_;
  std::ostream& log_;
  fs::path out_;
  std::optional<DirLock> lock_;
  std::size_t threads_ = 1;
  nlohmann::json manifest_ = nlohmann::json::object();
};

// ---------------------------------------------------------------- readers

inline TransactionPanel load_panel(const PipelineConfig& cfg) {
  const fs::path p = cfg.transactions_path();
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open transactions file " + p.string());
  try {
    return ingest_transactions(is, cfg.paths.transactions_format);
  } catch (const Error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline std::vector<ProductCatalogEntry> load_catalog(const PipelineConfig& cfg) {
  const fs::path p = cfg.catalog_path();
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open catalog file " + p.string());
  try {
    return ingest_catalog(is, cfg.paths.catalog_format);
  } catch (const Error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline void write_features_csv(const fs::path& p, const FeatureMatrix& x) {
  std::ostringstream os;
  os << "product_id";
  for (Eigen::Index c = 0; c < x.width(); ++c) os << ",f" << c;
  os << '\n';
  for (std::size_t i = 0; i < x.ids().size(); ++i) {
    os << hedonic::detail::csv_escape(x.ids()[i]);
    for (Eigen::Index c = 0; c < x.width(); ++c)
      os << ',' << hedonic::detail::format_double(x.values()(static_cast<Eigen::Index>(i), c));
    os << '\n';
  }
  write_file(p, os.str());
}

inline FeatureMatrix read_features_csv(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open " + p.string());
  std::vector<std::string> rec;
  std::size_t line = 0;
  if (!hedonic::detail::read_csv_record(is, rec, line) || rec.empty() || rec[0] != "product_id")
    throw ParseError(p.string() + ": bad feature header", 1);
  const std::size_t width = rec.size() - 1;
  std::vector<ProductId> ids;
  std::vector<double> vals;
  while (hedonic::detail::read_csv_record(is, rec, line)) {
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != width + 1) throw ParseError(p.string() + ": wrong field count", line);
    ids.push_back(rec[0]);
    for (std::size_t c = 1; c < rec.size(); ++c) {
      auto v = hedonic::detail::parse_double(rec[c]);
      if (!v) throw ParseError(p.string() + ": bad number '" + rec[c] + "'", line);
      vals.push_back(*v);
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = vals[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(c)];
  return FeatureMatrix(std::move(ids), std::move(x));
}

inline DataSplit read_split_csv(const fs::path& p, const TransactionPanel& panel) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open " + p.string());
  std::vector<std::string> rec;
  std::size_t line = 0;
  hedonic::detail::read_csv_record(is, rec, line);
  DataSplit s;
  while (hedonic::detail::read_csv_record(is, rec, line)) {
    if (rec.size() != 2) continue;
    auto idx = panel.product_index(rec[0]);
    if (!idx) throw LookupError(p.string() + ": unknown product " + rec[0]);
    if (rec[1] == "train")
      s.train.push_back(*idx);
    else if (rec[1] == "validation")
      s.validation.push_back(*idx);
    else if (rec[1] == "test")
      s.test.push_back(*idx);
    else
      throw ParseError(p.string() + ": unknown split '" + rec[1] + "'", line);
  }
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

/// Simple CSV table keyed by header names.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError("missing column '" + name + "'", 1);
  }
};

inline Table read_table(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open " + p.string());
  Table t;
  std::size_t line = 0;
  if (!hedonic::detail::read_csv_record(is, t.header, line)) return t;
  std::vector<std::string> rec;
  while (hedonic::detail::read_csv_record(is, rec, line)) {
    if (rec.size() == 1 && rec[0].empty()) continue;
    t.rows.push_back(rec);
  }
  return t;
}

inline NetworkConfig network_config(const PipelineConfig& cfg, int input_dim, int periods) {
  NetworkConfig n;
  n.layer_widths.push_back(input_dim);
  for (int w : cfg.network.hidden) n.layer_widths.push_back(w);
  n.activations = cfg.network.activations;
  n.dropout = cfg.network.dropout;
  n.periods = periods;
  n.validate();
  return n;
}

inline std::string fmt(double v) { return hedonic::detail::format_double(v); }

inline std::string split_csv(const TransactionPanel& panel, const DataSplit& s) {
  std::vector<std::pair<ProductId, const char*>> rows;
  for (auto i : s.train) rows.emplace_back(panel.product_id(i), "train");
  for (auto i : s.validation) rows.emplace_back(panel.product_id(i), "validation");
  for (auto i : s.test) rows.emplace_back(panel.product_id(i), "test");
  std::sort(rows.begin(), rows.end());
  std::string out = "product_id,split\n";
  for (const auto& [id, name] : rows) out += hedonic::detail::csv_escape(id) + "," + name + "\n";
  return out;
}

// ---------------------------------------------------------------- stages

inline void stage_simulate(Run& run) {
  const auto& cfg = run.config();
  if (!cfg.synthetic) throw ValidationError("simulate: config has no synthetic block");
  run.stage("simulate", cfg.synthetic->to_json(), {}, {"transactions.csv", "catalog.csv", "truth.csv"},
            [&](std::vector<std::string>& warnings) {
              MarketSpec spec = *cfg.synthetic;
              spec.seed = cfg.seed;
              const auto g = generate_panel(spec);
              std::ostringstream tx, cat, truth;
              write_transactions_csv(tx, g.panel);
              write_catalog_csv(cat, g.catalog);
              write_truth_csv(truth, g);
              write_file(run.out() / "transactions.csv", tx.str());
              write_file(run.out() / "catalog.csv", cat.str());
              write_file(run.out() / "truth.csv", truth.str());
              warnings = g.warnings;
            });
}

inline void stage_ingest(Run& run) {
  const auto& cfg = run.config();
  const nlohmann::json section = cfg.to_json()["paths"];
  run.stage("ingest", section, {cfg.transactions_path(), cfg.catalog_path()},
            {"panel_stats.csv", "data_quality.json"}, [&](std::vector<std::string>& warnings) {
              const auto panel = load_panel(cfg);
              const auto catalog = load_catalog(cfg);
              std::ostringstream os;
              os << "period,label,products,turnover,growth\n";
              for (Period t = 0; t < panel.periods(); ++t) {
                os << t << ',' << panel.period_label(t) << ',' << panel.universe(t).size() << ',';
                if (t > 0 && !panel.universe(t).empty()) os << fmt(turnover_rate(panel, t));
                os << ',';
                if (!panel.universe(0).empty()) os << fmt(growth_ratio(panel, t, 0));
                os << '\n';
              }
              write_file(run.out() / "panel_stats.csv", os.str());
              std::set<ProductId> have;
              for (const auto& e : catalog) have.insert(e.product_id);
              std::size_t missing = 0;
              for (const auto& id : panel.products()) missing += have.count(id) == 0;
              if (missing) warnings.push_back(std::to_string(missing) + " panel products have no catalog entry");
              const auto& q = panel.quality();
              nlohmann::json dq = {{"rows_read", q.rows_read},
                                   {"duplicate_rows_merged", q.duplicate_rows_merged},
                                   {"no_sale_cells", q.no_sale_cells},
                                   {"zero_price_cells", q.zero_price_cells},
                                   {"products", panel.product_count()},
                                   {"periods", panel.periods()},
                                   {"catalog_entries", catalog.size()},
                                   {"products_without_catalog", missing}};
              write_file(run.out() / "data_quality.json", dq.dump(2) + "\n");
            });
}

inline void stage_embed(Run& run) {
  const auto& cfg = run.config();
  const nlohmann::json section = cfg.to_json()["embedding"];
  run.stage("embed", section, {cfg.catalog_path()},
            {"embeddings.emb", "vocab.csv", "features.csv", "embedding_loss.csv"}, [&](std::vector<std::string>&) {
              const auto catalog = load_catalog(cfg);
              const auto corpus = catalog_corpus(catalog);
              const auto vocab = build_vocab(corpus, cfg.embedding.min_count);
              auto res = train_word2vec(encode_corpus(vocab, corpus), vocab.size(), cfg.embedding.word2vec);
              res.omega.tokens = vocab.tokens();
              std::ostringstream emb;
              write_embeddings(emb, res.omega);
              write_file(run.out() / "embeddings.emb", emb.str());
              std::ostringstream vs;
              vs << "index,token,frequency\n";
              for (std::size_t i = 0; i < vocab.size(); ++i)
                vs << i << ',' << hedonic::detail::csv_escape(vocab.token(i)) << ',' << vocab.frequency(i) << '\n';
              write_file(run.out() / "vocab.csv", vs.str());
              std::ostringstream ls;
              ls << "epoch,loss\n-1," << fmt(res.initial_loss) << '\n';
              for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) ls << e << ',' << fmt(res.epoch_loss[e]) << '\n';
              write_file(run.out() / "embedding_loss.csv", ls.str());
              write_features_csv(run.out() / "features.csv",
                                 build_features(catalog, res.omega, vocab, cfg.embedding.features));
            });
}

inline std::string r2_csv(const TransactionPanel& panel, const RSquared& r2, const Eigen::MatrixXd& weights) {
  std::ostringstream os;
  os << "period,label,r2,n_obs\n";
  for (Period t = 0; t < panel.periods(); ++t) {
    os << t << ',' << panel.period_label(t) << ',';
    if (r2.per_period[static_cast<std::size_t>(t)]) os << fmt(*r2.per_period[static_cast<std::size_t>(t)]);
    os << ',' << (weights.col(t).array() > 0.0).count() << '\n';
  }
  os << "pooled,pooled,";
  if (r2.pooled) os << fmt(*r2.pooled);
  os << ',' << (weights.array() > 0.0).count() << '\n';
  return os.str();
}

/// Holdout R^2 on the test split (validation when the test split is empty).
inline std::pair<RSquared, Eigen::MatrixXd> holdout_r2(const TransactionPanel& panel, const FeatureMatrix& x,
                                                       const DataSplit& split, const NetworkParams& p,
                                                       const TrainingConfig& tc) {
  const auto& rows = split.test.empty() ? split.validation : split.test;
  std::vector<ProductId> ids;
  for (auto i : rows) ids.push_back(panel.product_id(i));
  const auto m = panel_matrices(panel, rows, p.transform, tc.include_zero_prices);
  const Eigen::MatrixXd actual = m.prices.array().isNaN().select(0.0, m.prices);
  const Eigen::MatrixXd pred = ids.empty() ? Eigen::MatrixXd(0, panel.periods()) : predict_prices(p, x.gather(ids));
  return {r_squared(pred, actual, m.weights), m.weights};
}

inline void stage_train(Run& run) {
  const auto& cfg = run.config();
  nlohmann::json section = {{"network", cfg.to_json()["network"]}, {"training", cfg.to_json()["training"]}};
  run.stage("train", section, {cfg.transactions_path(), run.out() / "features.csv"},
            {"model.hnet", "learning_curve.csv", "split.csv", "holdout_r2.csv"},
            [&](std::vector<std::string>& warnings) {
              const auto panel = load_panel(cfg);
              const auto x = read_features_csv(run.out() / "features.csv");
              auto split = split_stratified(panel, cfg.training.split, cfg.seed);
              warnings.insert(warnings.end(), split.warnings.begin(), split.warnings.end());
              const auto net = network_config(cfg, static_cast<int>(x.width()), panel.periods());
              TrainingConfig tc = cfg.training.config;
              tc.threads = run.threads();
              const auto res = train(panel, x, split, net, tc);
              Checkpoint ck{res.params,
                            {{"best_epoch", res.best_epoch},
                             {"trained_on", res.trained_on.size()},
                             {"period_labels", panel.period_labels()}}};
              std::ostringstream ckos;
              write_checkpoint(ckos, ck);
              write_file(run.out() / "model.hnet", ckos.str());
              std::ostringstream lc;
              lc << "epoch,train_loss,val_loss,val_r2\n";
              for (const auto& e : res.curve) {
                lc << e.epoch << ',' << fmt(e.train_loss) << ',';
                if (!std::isnan(e.val_loss)) lc << fmt(e.val_loss);
                lc << ',';
                if (e.val_r2) lc << fmt(*e.val_r2);
                lc << '\n';
              }
              write_file(run.out() / "learning_curve.csv", lc.str());
              write_file(run.out() / "split.csv", split_csv(panel, split));
              const auto [r2, w] = holdout_r2(panel, x, split, res.params, tc);
              write_file(run.out() / "holdout_r2.csv", r2_csv(panel, r2, w));
            });
}

inline void stage_infer(Run& run) {
  const auto& cfg = run.config();
  nlohmann::json section = cfg.to_json()["inference"];
  if (cfg.inference.splits > 1) {
    section["network"] = cfg.to_json()["network"];
    section["training"] = cfg.to_json()["training"];
  }
  run.stage(
      "infer", section,
      {cfg.transactions_path(), run.out() / "features.csv", run.out() / "model.hnet", run.out() / "split.csv"},
      {"inference.csv", "product_ci.csv"}, [&](std::vector<std::string>& warnings) {
        const auto panel = load_panel(cfg);
        const auto x = read_features_csv(run.out() / "features.csv");
        const auto ck = load_checkpoint((run.out() / "model.hnet").string());
        const auto split = read_split_csv(run.out() / "split.csv", panel);
        const double alpha = cfg.inference.alpha;
        const OlsOptions opt{cfg.inference.covariance, cfg.inference.ridge_fallback};
        const Eigen::Index n = static_cast<Eigen::Index>(panel.product_count());
        const Eigen::Index T = panel.periods();
        const double nan = std::numeric_limits<double>::quiet_NaN();

        // One split's estimates on the full product x period grid.
        auto run_split = [&](const NetworkParams& params, const DataSplit& s, std::ostringstream* coef,
                             std::ostringstream* ci) {
          SplitEstimate est{Eigen::MatrixXd::Constant(n, T, nan), Eigen::MatrixXd::Constant(n, T, nan),
                            Eigen::MatrixXd::Constant(n, T, nan), Eigen::MatrixXd::Constant(n, T, nan)};
          std::vector<ProductId> test_ids, train_ids;
          for (auto i : s.test) test_ids.push_back(panel.product_id(i));
          for (auto i : s.train) train_ids.push_back(panel.product_id(i));
          if (test_ids.empty()) throw PreconditionError("infer: the test split is empty");
          const auto table = extract_value_embeddings(params, x, test_ids, train_ids);
          for (Period t = 0; t < T; ++t) {
            OlsFit fit;
            try {
              fit = ols_on_embeddings(table, panel, t, test_ids, opt);
            } catch (const SingularDesignError& e) {
              warnings.push_back("period " + panel.period_label(t) + " skipped: " + e.what());
              continue;
            }
            if (fit.ridge) warnings.push_back("period " + panel.period_label(t) + " fitted with ridge fallback");
            if (coef) {
              const auto tests = pvalues_bonferroni(fit, alpha);
              for (Eigen::Index k = 0; k < fit.dim(); ++k)
                *coef << panel.period_label(t) << ',' << k << ',' << fmt(fit.theta_hat[k]) << ','
                      << fmt(std::sqrt(std::max(0.0, fit.covariance(k, k)))) << ',' << fmt(tests.p_values[k]) << ','
                      << (tests.significant[static_cast<std::size_t>(k)] ? "true" : "false") << '\n';
            }
            const double resid_var = price_residual_variance(fit);
            for (const auto& id : fit.products) {
              const Eigen::VectorXd v = table.lookup(id);
              const auto h = hedonic_ci(fit, v, alpha);
              const auto i = static_cast<Eigen::Index>(*panel.product_index(id));
              est.estimates(i, t) = h.center;
              est.lower(i, t) = h.lower;
              est.upper(i, t) = h.upper;
              est.p_values(i, t) =
                  h.se > 0.0 ? stats::two_sided_normal_pvalue(h.center / h.se) : (h.center == 0.0 ? 1.0 : 0.0);
              if (ci) {
                const auto s2 = predictive_ci(fit, v, alpha, resid_var);
                for (const auto& c : {h, s2})
                  *ci << hedonic::detail::csv_escape(id) << ',' << panel.period_label(t) << ',' << fmt(c.center)
                      << ',' << fmt(c.se) << ',' << fmt(c.lower) << ',' << fmt(c.upper) << ',' << to_string(c.kind)
                      << ',' << fmt(c.level) << '\n';
              }
            }
          }
          return est;
        };

        std::ostringstream coef, ci;
        coef << "period,coef_index,theta_hat,se,p_value,significant_bonferroni\n";
        ci << "product_id,period,h_hat,se,lower,upper,kind,level\n";
        std::vector<SplitEstimate> all;
        all.push_back(run_split(ck.params, split, &coef, &ci));
        write_file(run.out() / "inference.csv", coef.str());
        write_file(run.out() / "product_ci.csv", ci.str());

        if (cfg.inference.splits > 1) {
          for (int s = 1; s < cfg.inference.splits; ++s) {
            const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s) * 1000003ULL;
            const auto sp = split_stratified(panel, cfg.training.split, seed);
            TrainingConfig tc = cfg.training.config;
            tc.seed = seed;
            tc.threads = run.threads();
            const auto res = train(panel, x, sp, network_config(cfg, static_cast<int>(x.width()), panel.periods()), tc);
            all.push_back(run_split(res.params, sp, nullptr, nullptr));
          }
          const auto agg = median_aggregate(all, alpha);
          std::ostringstream os;
          os << "product_id,period,h_median,lower,upper,p_value,significant,level,splits\n";
          for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index t = 0; t < T; ++t) {
              if (std::isnan(agg.medians(i, t))) continue;
              os << hedonic::detail::csv_escape(panel.product_id(static_cast<std::size_t>(i))) << ','
                 << panel.period_label(static_cast<Period>(t)) << ',' << fmt(agg.medians(i, t)) << ','
                 << fmt(agg.lower(i, t)) << ',' << fmt(agg.upper(i, t)) << ',' << fmt(agg.p_values(i, t)) << ','
                 << (agg.significant(i, t) ? "true" : "false") << ',' << fmt(agg.adjusted_level) << ','
                 << agg.splits << '\n';
            }
          write_file(run.out() / "product_ci_median.csv", os.str());
        }
      });
}

/// Every configured series over the whole panel, in a fixed order.
inline std::vector<IndexSeries> compute_indices(const PipelineConfig& cfg, const TransactionPanel& panel,
                                                const HedonicSurface& surface) {
  std::vector<IndexSeries> out;
  for (auto kind : cfg.index.kinds) {
    for (int lag : cfg.index.lags) {
      if (chain_steps(panel.periods(), cfg.index.base, lag) < 1) continue;
      switch (kind) {
        case IndexKind::matched_L: out.push_back(chain_matched(panel, Formula::laspeyres, cfg.index.base, lag)); break;
        case IndexKind::matched_P: out.push_back(chain_matched(panel, Formula::paasche, cfg.index.base, lag)); break;
        case IndexKind::matched_F: out.push_back(chain_matched(panel, Formula::fisher, cfg.index.base, lag)); break;
        case IndexKind::hedonic_L:
          out.push_back(chain_hedonic(surface, panel, Formula::laspeyres, cfg.index.base, lag));
          break;
        case IndexKind::hedonic_P:
          out.push_back(chain_hedonic(surface, panel, Formula::paasche, cfg.index.base, lag));
          break;
        case IndexKind::hedonic_F:
          out.push_back(chain_hedonic(surface, panel, Formula::fisher, cfg.index.base, lag));
          break;
        case IndexKind::jevons: out.push_back(chain_jevons(panel, cfg.index.base, lag)); break;
        case IndexKind::combined: break;
      }
    }
  }
  if (cfg.index.combine) {
    const IndexSeries* monthly = nullptr;
    const IndexSeries* yearly = nullptr;
    for (const auto& s : out)
      if (s.kind == IndexKind::hedonic_F) {
        if (s.lag == 1) monthly = &s;
        if (s.lag == 12) yearly = &s;
      }
    if (monthly && yearly) {
      auto c = geometric_combine(*monthly, *yearly);
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline void stage_index(Run& run) {
  const auto& cfg = run.config();
  run.stage("index", cfg.to_json()["index"],
            {cfg.transactions_path(), run.out() / "features.csv", run.out() / "model.hnet"},
            {"indices.csv", "index_summary.csv"}, [&](std::vector<std::string>& warnings) {
              const auto panel = load_panel(cfg);
              const auto x = read_features_csv(run.out() / "features.csv");
              const auto ck = load_checkpoint((run.out() / "model.hnet").string());
              HedonicSurface surface;
              surface.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.product_count()),
                                                         panel.periods(), std::numeric_limits<double>::quiet_NaN());
              std::vector<ProductId> have;
              std::vector<std::size_t> rows;
              for (std::size_t i = 0; i < panel.product_count(); ++i)
                if (x.row(panel.product_id(i))) {
                  have.push_back(panel.product_id(i));
                  rows.push_back(i);
                }
              if (have.size() < panel.product_count())
                warnings.push_back(std::to_string(panel.product_count() - have.size()) +
                                   " products lack features and have no hedonic prices");
              if (!have.empty()) {
                const Eigen::MatrixXd pred = predict_prices(ck.params, x.gather(have));
                for (std::size_t k = 0; k < rows.size(); ++k)
                  surface.values.row(static_cast<Eigen::Index>(rows[k])) = pred.row(static_cast<Eigen::Index>(k));
              }
              const auto series = compute_indices(cfg, panel, surface);
              std::ostringstream os, sum;
              os << "kind,lag,period,level\n";
              sum << "kind,lag,annualized_rate_pct,from,to\n";
              for (const auto& s : series) {
                for (const auto& [t, level] : s.levels)
                  os << to_string(s.kind) << ',' << s.lag << ',' << panel.period_label(t) << ',' << fmt(level) << '\n';
                const Period from = s.levels.begin()->first, to = s.levels.rbegin()->first;
                if (to > from)
                  sum << to_string(s.kind) << ',' << s.lag << ',' << fmt(annualized_rate(s, from, to)) << ','
                      << panel.period_label(from) << ',' << panel.period_label(to) << '\n';
              }
              write_file(run.out() / "indices.csv", os.str());
              write_file(run.out() / "index_summary.csv", sum.str());
            });
}

/// Charts from the run directory: report.svg (index paths), r2.svg,
/// turnover.svg and growth.svg.
inline void check_report_inputs(const fs::path& dir) {
  std::vector<std::string> absent;
  for (const char* f : {"indices.csv", "holdout_r2.csv", "panel_stats.csv"})
    if (!fs::exists(dir / f)) absent.push_back(f);
  if (!absent.empty()) {
    std::string msg = "report: missing artifacts in " + dir.string() + ":";
    for (const auto& a : absent) msg += " " + a;
    throw Error(msg);
  }
}

inline void render_report(const fs::path& dir) {
  check_report_inputs(dir);
  const Table stats = read_table(dir / "panel_stats.csv");
  if (stats.rows.empty()) throw Error("report: panel_stats.csv is empty");
  std::map<std::string, double> month;
  std::vector<std::string> labels;
  {
    const auto cp = stats.column("period"), cl = stats.column("label");
    for (const auto& r : stats.rows) {
      month[r[cl]] = std::stod(r[cp]);
      labels.push_back(r[cl]);
    }
  }
  auto x_of = [&](const std::string& label) {
    auto it = month.find(label);
    if (it == month.end()) throw Error("report: unknown period label " + label);
    return it->second;
  };

  const Table idx = read_table(dir / "indices.csv");
  if (idx.rows.empty()) throw Error("report: indices.csv is empty");
  svg::LineChart chart{"Price index paths", "period", "index level (base = 1)", {}, labels};
  {
    const auto ck = idx.column("kind"), cl = idx.column("lag"), cp = idx.column("period"), cv = idx.column("level");
    std::map<std::string, std::size_t> pos;
    for (const auto& r : idx.rows) {
      const std::string name = r[ck] + " lag " + r[cl];
      auto it = pos.find(name);
      if (it == pos.end()) {
        it = pos.emplace(name, chart.series.size()).first;
        chart.series.push_back({name, {}});
      }
      chart.series[it->second].points.emplace_back(x_of(r[cp]), std::stod(r[cv]));
    }
  }
  write_file(dir / "report.svg", svg::render(chart));

  const Table r2 = read_table(dir / "holdout_r2.csv");
  svg::LineChart r2c{"Hold-out R^2 by period", "period", "R^2", {{"holdout", {}}}, labels};
  {
    const auto cp = r2.column("period"), cv = r2.column("r2");
    for (const auto& r : r2.rows)
      if (r[cp] != "pooled" && !r[cv].empty()) r2c.series[0].points.emplace_back(std::stod(r[cp]), std::stod(r[cv]));
  }
  if (r2c.series[0].points.empty()) throw Error("report: holdout_r2.csv has no defined R^2 values");
  write_file(dir / "r2.svg", svg::render(r2c));

  svg::LineChart tc{"Product turnover", "period", "share of new products", {{"turnover", {}}}, labels};
  svg::LineChart gc{"Transacting products relative to the first period", "period", "|C_t| / |C_0|", {{"growth", {}}},
                    labels};
  {
    const auto cp = stats.column("period"), ct = stats.column("turnover"), cg = stats.column("growth");
    for (const auto& r : stats.rows) {
      if (!r[ct].empty()) tc.series[0].points.emplace_back(std::stod(r[cp]), std::stod(r[ct]));
      if (!r[cg].empty()) gc.series[0].points.emplace_back(std::stod(r[cp]), std::stod(r[cg]));
    }
  }
  if (tc.series[0].points.empty()) tc.series[0].points.emplace_back(0.0, 0.0);
  write_file(dir / "turnover.svg", svg::render(tc));
  write_file(dir / "growth.svg", svg::render(gc));
}

inline void stage_report(Run& run) {
  check_report_inputs(run.out());
  run.stage("report", nlohmann::json::object(),
            {run.out() / "indices.csv", run.out() / "holdout_r2.csv", run.out() / "panel_stats.csv"},
            {"report.svg", "r2.svg", "turnover.svg", "growth.svg"},
            [&](std::vector<std::string>&) { render_report(run.out()); });
}

inline void run_pipeline(Run& run) {
  if (run.config().synthetic) stage_simulate(run);
  stage_ingest(run);
  stage_embed(run);
  stage_train(run);
  stage_infer(run);
  stage_index(run);
  stage_report(run);
}

}  // namespace hedonic::pipeline

#endif  // HEDONIC_PIPELINE_HPP_
