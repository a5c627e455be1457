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

#ifndef HEDONIC_TESTS_SUPPORT_HPP_
#define HEDONIC_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

namespace hedonic::testing {

/// Relative error with a floor so that tiny gradients are compared
/// absolutely.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Central finite difference of f along every coordinate of x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        Eigen::VectorXd x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a[i], b[i], floor));
  return m;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

}  // namespace hedonic::testing

#endif  // HEDONIC_TESTS_SUPPORT_HPP_
