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

#ifndef HEDONIC_RESIDUAL_BLOCK_HPP_
#define HEDONIC_RESIDUAL_BLOCK_HPP_

#include <Eigen/Dense>

#include "hedonic/activation.hpp"
#include "hedonic/error.hpp"

namespace hedonic {

struct ResidualBlockParams {
  Eigen::MatrixXd w0, w1;
  Activation act0 = Activation::relu;
  Activation act1 = Activation::relu;
};

/// v + act1(w1 * act0(w0 * v)).
inline Eigen::VectorXd residual_block_forward(const ResidualBlockParams& p,
                                              const Eigen::VectorXd& v) {
  if (p.w0.cols() != v.size() || p.w1.cols() != p.w0.rows() || p.w1.rows() != v.size())
    throw DimensionError("residual block: w1 * act0(w0 * v) must have the shape of v");
  if (!p.w0.allFinite() || !p.w1.allFinite())
    throw ValidationError("residual block: non-finite weights");
  const Eigen::VectorXd inner = activate(p.act0, p.w0 * v);
  return v + activate(p.act1, p.w1 * inner);
}

}  // namespace hedonic

#endif  // HEDONIC_RESIDUAL_BLOCK_HPP_
