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

#ifndef HEDONIC_FEATURES_HPP_
#define HEDONIC_FEATURES_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hedonic/error.hpp"
#include "hedonic/market_data.hpp"
#include "hedonic/text_features.hpp"
#include "hedonic/trainer.hpp"
#include "hedonic/vocabulary.hpp"
#include "hedonic/word2vec.hpp"

namespace hedonic {

/// How catalog text and images become the network input x_i:
/// [title words stacked by position | weighted mean of description and
/// bullet words | image features].
struct FeatureConfig {
  std::size_t title_words = 8;
  bool description = true;
  WordWeighting weighting = WordWeighting::inverse_frequency;
  bool images = true;

  nlohmann::json to_json() const {
    return {{"title_words", title_words},
            {"description", description},
            {"weighting", weighting == WordWeighting::uniform ? "uniform" : "inverse_frequency"},
            {"images", images}};
  }

  static FeatureConfig from_json(const nlohmann::json& j) {
    FeatureConfig c;
    c.title_words = j.value("title_words", c.title_words);
    c.description = j.value("description", c.description);
    const std::string w = j.value("weighting", std::string("inverse_frequency"));
    if (w == "uniform")
      c.weighting = WordWeighting::uniform;
    else if (w == "inverse_frequency")
      c.weighting = WordWeighting::inverse_frequency;
    else
      throw ValidationError("unknown word weighting '" + w + "'");
    c.images = j.value("images", c.images);
    return c;
  }
};

/// Title, description and each bullet point as separate sentences.
inline std::vector<std::string> catalog_corpus(const std::vector<ProductCatalogEntry>& catalog) {
  std::vector<std::string> out;
  for (const auto& e : catalog) {
    out.push_back(e.title);
    if (!e.description.empty()) out.push_back(e.description);
    for (const auto& b : e.bullet_points) out.push_back(b);
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> encode_corpus(const Vocabulary& vocab,
                                                           const std::vector<std::string>& corpus) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(vocab.encode(s));
  return out;
}

inline FeatureMatrix build_features(const std::vector<ProductCatalogEntry>& catalog,
                                    const EmbeddingMatrix& omega, const Vocabulary& vocab,
                                    const FeatureConfig& cfg) {
  if (omega.vocab_size() != vocab.size())
    throw DimensionError("embedding vocabulary size does not match the vocabulary");
  const auto r = static_cast<Eigen::Index>(omega.dim());
  Eigen::Index image_dim = 0;
  if (cfg.images)
    for (const auto& e : catalog)
      if (e.image_features) {
        image_dim = static_cast<Eigen::Index>(e.image_features->size());
        break;
      }
  const Eigen::Index width = r * static_cast<Eigen::Index>(cfg.title_words) + (cfg.description ? r : 0) + image_dim;
  if (width == 0) throw PreconditionError("build_features: configuration selects no features");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(catalog.size()), width);
  std::vector<ProductId> ids;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& e = catalog[i];
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index o = 0;
    if (cfg.title_words > 0) {
      const auto tokens = vocab.encode(e.title);
      const Eigen::VectorXd t = concat_embedding(omega, tokens, cfg.title_words);
      x.row(row).segment(o, t.size()) = t.transpose();
      o += t.size();
    }
    if (cfg.description) {
      auto tokens = vocab.encode(e.description);
      for (const auto& b : e.bullet_points) {
        const auto more = vocab.encode(b);
        tokens.insert(tokens.end(), more.begin(), more.end());
      }
      const auto s = sentence_embedding(omega, tokens, cfg.weighting, vocab.frequencies());
      x.row(row).segment(o, r) = s.vector.transpose();
      o += r;
    }
    if (image_dim > 0 && e.image_features) {
      if (static_cast<Eigen::Index>(e.image_features->size()) != image_dim)
        throw DimensionError("image feature dimension differs across products");
      for (Eigen::Index d = 0; d < image_dim; ++d) x(row, o + d) = (*e.image_features)[static_cast<std::size_t>(d)];
    }
    ids.push_back(e.product_id);
  }
  return FeatureMatrix(std::move(ids), std::move(x));
}

}  // namespace hedonic

#endif  // HEDONIC_FEATURES_HPP_
