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

#ifndef HEDONIC_ATTENTION_HPP_
#define HEDONIC_ATTENTION_HPP_

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hedonic/error.hpp"

namespace hedonic {

/// Multi-head self-attention weights. Head i projects inputs with
/// query[i], key[i] (d_in x d_k) and value[i] (d_in x d_v); the concatenated
/// heads (n x h*d_v) are mixed by `output` (h*d_v x d_out).
struct AttentionParams {
  std::vector<Eigen::MatrixXd> query, key, value;
  Eigen::MatrixXd output;

  std::size_t heads() const { return query.size(); }
  Eigen::Index key_dim() const { return query.empty() ? 0 : query.front().cols(); }

  void validate(Eigen::Index d_in) const {
    const std::size_t h = heads();
    if (h == 0) throw DimensionError("attention: at least one head required");
    if (key.size() != h || value.size() != h)
      throw DimensionError("attention: query/key/value head counts differ");
    const Eigen::Index dk = key_dim(), dv = value.front().cols();
    for (std::size_t i = 0; i < h; ++i) {
      if (query[i].rows() != d_in || key[i].rows() != d_in || value[i].rows() != d_in)
        throw DimensionError("attention: projection rows must equal the input width");
      if (query[i].cols() != dk || key[i].cols() != dk)
        throw DimensionError("attention: query and key widths differ");
      if (value[i].cols() != dv) throw DimensionError("attention: value widths differ");
      if (!query[i].allFinite() || !key[i].allFinite() || !value[i].allFinite())
        throw ValidationError("attention: non-finite projection");
    }
    if (output.rows() != static_cast<Eigen::Index>(h) * dv)
      throw DimensionError("attention: output matrix rows must equal heads * d_v");
    if (!output.allFinite()) throw ValidationError("attention: non-finite output matrix");
  }
};

/// Row-wise softmax, max-shifted.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    out.row(i) = (s.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// MultiHead(X, X, X) = [Head_1 ... Head_h] W_o with
/// Head_i = softmax(X Wq_i (X Wk_i)' / sqrt(d_k)) X Wv_i.
/// `weights`, if given, receives each head's n x n attention matrix.
inline Eigen::MatrixXd attention_forward(const AttentionParams& p, const Eigen::MatrixXd& x,
                                         std::vector<Eigen::MatrixXd>* weights = nullptr) {
  if (x.rows() < 1) throw PreconditionError("attention: need at least one input row");
  p.validate(x.cols());
  const std::size_t h = p.heads();
  const Eigen::Index dv = p.value.front().cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.key_dim()));
  Eigen::MatrixXd concat(x.rows(), static_cast<Eigen::Index>(h) * dv);
  if (weights) weights->clear();
  for (std::size_t i = 0; i < h; ++i) {
    const Eigen::MatrixXd q = x * p.query[i];
    const Eigen::MatrixXd k = x * p.key[i];
    const Eigen::MatrixXd a = softmax_rows(scale * q * k.transpose());
    concat.middleCols(static_cast<Eigen::Index>(i) * dv, dv) = a * (x * p.value[i]);
    if (weights) weights->push_back(a);
  }
  return concat * p.output;
}

}  // namespace hedonic

#endif  // HEDONIC_ATTENTION_HPP_
