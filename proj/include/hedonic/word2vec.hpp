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
 * @file word2vec.hpp
 * @brief CBOW word embeddings with a full softmax and tied output weights.
 *
 * The centre word of every (K+1)-word window is predicted from the plain
 * average of its K context embeddings,
 *
 *   p(t | context) = exp(u_t' ubar) / sum_s exp(u_s' ubar),
 *
 * where the logit weights are the embedding columns themselves. Training
 * maximises the summed log-probability by mini-batch gradient ascent.
 */

#ifndef HEDONIC_WORD2VEC_HPP_
#define HEDONIC_WORD2VEC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hedonic/detail/binary_io.hpp"
#include "hedonic/detail/parallel.hpp"
#include "hedonic/error.hpp"

namespace hedonic {

/// r x d matrix whose column j embeds token j.
struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> tokens;  // optional, size d when present

  std::size_t dim() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(values.cols()); }
  auto column(std::size_t j) const { return values.col(static_cast<Eigen::Index>(j)); }

  void validate() const {
    if (!values.allFinite()) throw ValidationError("embedding matrix has non-finite entries");
    if (!tokens.empty() && tokens.size() != vocab_size())
      throw DimensionError("embedding token list does not match column count");
  }
};

namespace detail {

inline void check_indices(std::size_t d, std::span<const std::size_t> ids, const char* what) {
  for (auto i : ids)
    if (i >= d)
      throw PreconditionError(std::string(what) + " index " + std::to_string(i) +
                              " out of vocabulary of size " + std::to_string(d));
}

inline Eigen::VectorXd context_mean(const Eigen::MatrixXd& omega,
                                    std::span<const std::size_t> context) {
  Eigen::VectorXd ubar = Eigen::VectorXd::Zero(omega.rows());
  for (auto j : context) ubar += omega.col(static_cast<Eigen::Index>(j));
  return ubar / static_cast<double>(context.size());
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

}  // namespace detail

/// Distribution of the centre word over the whole vocabulary.
inline Eigen::VectorXd word_distribution(const EmbeddingMatrix& omega,
                                         std::span<const std::size_t> context) {
  if (context.empty()) throw PreconditionError("word_probability: empty context");
  detail::check_indices(omega.vocab_size(), context, "context");
  const Eigen::VectorXd ubar = detail::context_mean(omega.values, context);
  return detail::softmax(omega.values.transpose() * ubar);
}

inline double word_probability(const EmbeddingMatrix& omega,
                               std::span<const std::size_t> context, std::size_t target) {
  if (target >= omega.vocab_size())
    throw PreconditionError("word_probability: target out of vocabulary");
  return word_distribution(omega, context)(static_cast<Eigen::Index>(target));
}

/// log p(center | context) and, when `grad` is non-null, adds its gradient
/// with respect to every embedding column into `grad` (r x d).
inline double window_log_prob(const Eigen::MatrixXd& omega, std::span<const std::size_t> context,
                              std::size_t center, Eigen::MatrixXd* grad) {
  const Eigen::VectorXd ubar = detail::context_mean(omega, context);
  const Eigen::VectorXd z = omega.transpose() * ubar;
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  const auto c = static_cast<Eigen::Index>(center);
  const double lp = z(c) - lse;
  if (grad != nullptr) {
    const Eigen::VectorXd p = (z.array() - lse).exp().matrix();
    // Through the logits: column j gets (1[j=c] - p_j) * ubar.
    grad->noalias() -= ubar * p.transpose();
    grad->col(c) += ubar;
    // Through ubar: each context occurrence gets (u_c - E_p[u]) / K.
    const Eigen::VectorXd e = (omega.col(c) - omega * p) / static_cast<double>(context.size());
    for (auto j : context) grad->col(static_cast<Eigen::Index>(j)) += e;
  }
  return lp;
}

/// One training example: K context tokens around a centre token.
struct CbowWindow {
  std::vector<std::size_t> context;
  std::size_t center = 0;
};

/// Every full window of K context words (K/2 each side) inside each sentence.
inline std::vector<CbowWindow> make_windows(const std::vector<std::vector<std::size_t>>& sentences,
                                            int window) {
  if (window < 2 || window % 2 != 0)
    throw PreconditionError("CBOW window K must be even and >= 2");
  const std::size_t half = static_cast<std::size_t>(window / 2);
  std::vector<CbowWindow> out;
  for (const auto& s : sentences) {
    if (s.size() < 2 * half + 1) continue;
    for (std::size_t c = half; c + half < s.size(); ++c) {
      CbowWindow w;
      w.center = s[c];
      for (std::size_t k = c - half; k <= c + half; ++k)
        if (k != c) w.context.push_back(s[k]);
      out.push_back(std::move(w));
    }
  }
  return out;
}

struct Word2VecConfig {
  int dim = 16;                 // r
  int window = 4;               // K
  int epochs = 20;
  double learning_rate = 0.5;   // step on the batch-mean log-likelihood
  std::size_t batch_size = 32;
  double init_scale = 0.5;      // entries ~ U(-s, s) / r
  bool zero_init = false;
  std::uint64_t seed = 1;
  std::size_t threads = 1;      // >1 shards each batch; reduction order is fixed
};

struct Word2VecResult {
  EmbeddingMatrix omega;
  double initial_loss = 0.0;        // mean -log p before the first update
  std::vector<double> epoch_loss;   // mean -log p after each epoch
};

/// Mean negative log-likelihood over `windows`.
inline double cbow_loss(const Eigen::MatrixXd& omega, const std::vector<CbowWindow>& windows) {
  double s = 0.0;
  for (const auto& w : windows) s -= window_log_prob(omega, w.context, w.center, nullptr);
  return s / static_cast<double>(windows.size());
}

inline Word2VecResult train_word2vec(const std::vector<std::vector<std::size_t>>& sentences,
                                     std::size_t vocab_size, const Word2VecConfig& cfg) {
  if (vocab_size < 2) throw PreconditionError("train_word2vec: vocabulary must have d >= 2");
  if (cfg.dim < 1) throw PreconditionError("train_word2vec: dimension must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw PreconditionError("train_word2vec: learning rate <= 0");
  auto windows = make_windows(sentences, cfg.window);
  if (windows.empty())
    throw PreconditionError("train_word2vec: no training examples (every sentence is shorter "
                            "than the window)");
  for (const auto& w : windows) {
    detail::check_indices(vocab_size, w.context, "context");
    detail::check_indices(vocab_size, std::span(&w.center, 1), "center");
  }

  std::mt19937_64 rng(cfg.seed);
  const auto r = static_cast<Eigen::Index>(cfg.dim);
  const auto d = static_cast<Eigen::Index>(vocab_size);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(r, d);
  if (!cfg.zero_init) {
    std::uniform_real_distribution<double> u(-cfg.init_scale, cfg.init_scale);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < r; ++i) omega(i, j) = u(rng) / static_cast<double>(r);
  }

  Word2VecResult res;
  res.initial_loss = cbow_loss(omega, windows);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t e = std::min(order.size(), b + batch);
      Eigen::MatrixXd g = detail::ordered_reduce(
          e - b, cfg.threads, Eigen::MatrixXd(Eigen::MatrixXd::Zero(r, d)),
          [&](Eigen::MatrixXd& acc, std::size_t lo, std::size_t hi) {
            for (std::size_t k = lo; k < hi; ++k) {
              const auto& w = windows[order[b + k]];
              window_log_prob(omega, w.context, w.center, &acc);
            }
          },
          [](Eigen::MatrixXd& acc, const Eigen::MatrixXd& part) { acc += part; });
      if (!g.allFinite()) throw DivergenceError("word2vec gradient is not finite", epoch);
      omega += (cfg.learning_rate / static_cast<double>(e - b)) * g;
    }
    const double loss = cbow_loss(omega, windows);
    if (!std::isfinite(loss)) throw DivergenceError("word2vec loss is not finite", epoch);
    res.epoch_loss.push_back(loss);
  }
  res.omega.values = std::move(omega);
  return res;
}

/// EMB1: magic, u32 r, u32 d, r*d f64 column-major, then d length-prefixed
/// UTF-8 tokens. All integers and floats little-endian.
inline void write_embeddings(std::ostream& os, const EmbeddingMatrix& m) {
  m.validate();
  os.write("EMB1", 4);
  detail::write_u32(os, static_cast<std::uint32_t>(m.dim()));
  detail::write_u32(os, static_cast<std::uint32_t>(m.vocab_size()));
  for (Eigen::Index j = 0; j < m.values.cols(); ++j)
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) detail::write_f64(os, m.values(i, j));
  for (std::size_t j = 0; j < m.vocab_size(); ++j)
    detail::write_string(os, m.tokens.empty() ? std::string() : m.tokens[j]);
}

inline EmbeddingMatrix read_embeddings(std::istream& is) {
  detail::expect_magic(is, "EMB1");
  const auto r = detail::read_u32(is);
  const auto d = detail::read_u32(is);
  EmbeddingMatrix m;
  m.values.resize(r, d);
  for (std::uint32_t j = 0; j < d; ++j)
    for (std::uint32_t i = 0; i < r; ++i) m.values(i, j) = detail::read_f64(is);
  m.tokens.reserve(d);
  for (std::uint32_t j = 0; j < d; ++j) m.tokens.push_back(detail::read_string(is));
  return m;
}

}  // namespace hedonic

#endif  // HEDONIC_WORD2VEC_HPP_
