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

#ifndef HEDONIC_ACTIVATION_HPP_
#define HEDONIC_ACTIVATION_HPP_

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "hedonic/error.hpp"

namespace hedonic {

enum class Activation { linear, relu, sigmoid };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ValidationError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

template <typename Derived>
Eigen::MatrixXd activate(Activation a, const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([a](double v) { return activate(a, v); });
}

/// d sigma / dx expressed through the pre-activation `z` and output `y`.
inline double activation_slope(Activation a, double z, double y) {
  switch (a) {
    case Activation::linear: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace hedonic

#endif  // HEDONIC_ACTIVATION_HPP_
