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

#ifndef HEDONIC_TEXT_FEATURES_HPP_
#define HEDONIC_TEXT_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hedonic/error.hpp"
#include "hedonic/word2vec.hpp"

namespace hedonic {

/// u'v / (|u| |v|).
inline double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                                const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw DimensionError("cosine_similarity: length mismatch");
  const double nu = u.norm(), nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw UndefinedError("cosine_similarity: zero-norm vector");
  const double c = u.dot(v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

enum class WordWeighting { uniform, inverse_frequency };

struct SentenceEmbedding {
  Eigen::VectorXd vector;
  std::size_t word_count = 0;
  bool empty = false;  // no tokens; vector is zero
};

/// (1/J) sum_j lambda_j u_j. Uniform weights are lambda_j = 1; inverse
/// frequency weights are 1/freq_j rescaled to average 1 over the J tokens.
/// `frequencies` is indexed by token and only read for inverse_frequency.
inline SentenceEmbedding sentence_embedding(const EmbeddingMatrix& omega,
                                            std::span<const std::size_t> tokens,
                                            WordWeighting weighting = WordWeighting::uniform,
                                            std::span<const std::size_t> frequencies = {}) {
  SentenceEmbedding out;
  out.vector = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(omega.dim()));
  out.word_count = tokens.size();
  if (tokens.empty()) {
    out.empty = true;
    return out;
  }
  detail::check_indices(omega.vocab_size(), tokens, "token");
  std::vector<double> lambda(tokens.size(), 1.0);
  if (weighting == WordWeighting::inverse_frequency) {
    if (frequencies.size() < omega.vocab_size())
      throw DimensionError("sentence_embedding: frequency table shorter than vocabulary");
    double mean = 0.0;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const auto f = frequencies[tokens[j]];
      lambda[j] = 1.0 / static_cast<double>(f > 0 ? f : 1);
      mean += lambda[j];
    }
    mean /= static_cast<double>(tokens.size());
    for (auto& l : lambda) l /= mean;
  }
  for (std::size_t j = 0; j < tokens.size(); ++j) out.vector += lambda[j] * omega.column(tokens[j]);
  out.vector /= static_cast<double>(tokens.size());
  return out;
}

/// First `max_words` embeddings stacked in order, zero-padded to length r*J.
inline Eigen::VectorXd concat_embedding(const EmbeddingMatrix& omega,
                                        std::span<const std::size_t> tokens,
                                        std::size_t max_words) {
  if (max_words < 1) throw PreconditionError("concat_embedding: max_words must be >= 1");
  const auto r = static_cast<Eigen::Index>(omega.dim());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(r * static_cast<Eigen::Index>(max_words));
  const std::size_t n = std::min(max_words, tokens.size());
  detail::check_indices(omega.vocab_size(), tokens.first(n), "token");
  for (std::size_t j = 0; j < n; ++j)
    out.segment(static_cast<Eigen::Index>(j) * r, r) = omega.column(tokens[j]);
  return out;
}

}  // namespace hedonic

#endif  // HEDONIC_TEXT_FEATURES_HPP_
