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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hedonic/checkpoint.hpp"
#include "hedonic/network.hpp"
#include "support.hpp"

namespace hedonic {
namespace {

using testing::max_rel_err;
using testing::numeric_gradient;
using testing::random_matrix;

NetworkConfig small_config(Activation a = Activation::sigmoid, int periods = 3) {
  return {{4, 5, 3}, {a, a}, periods, {}};
}

LossBatch random_batch(const NetworkConfig& c, Eigen::Index n, std::mt19937_64& rng, double mask_rate = 0.3) {
  LossBatch b;
  b.features = random_matrix(n, c.input_dim(), rng);
  b.targets = random_matrix(n, c.periods, rng, 2.0);
  b.weights.resize(n, c.periods);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index j = 0; j < b.weights.cols(); ++j)
    for (Eigen::Index i = 0; i < n; ++i) b.weights(i, j) = u(rng) < mask_rate ? 0.0 : 0.5 + 3.0 * u(rng);
  b.weights(0, 0) = 1.0;
  return b;
}

TEST(NetworkConfig, Validation) {
  EXPECT_NO_THROW(small_config().validate());
  NetworkConfig c{{4}, {}, 1, {}};
  EXPECT_THROW(c.validate(), ValidationError);
  c = {{4, 3, 3, 3, 3}, {Activation::relu, Activation::relu, Activation::relu, Activation::relu}, 1, {}};
  EXPECT_THROW(c.validate(), ValidationError);
  c = {{4, 513}, {Activation::relu}, 1, {}};
  EXPECT_THROW(c.validate(), ValidationError);
  c = {{4, 3}, {Activation::relu}, 0, {}};
  EXPECT_THROW(c.validate(), ValidationError);
  c = {{4, 3}, {Activation::relu}, 1, {1.0}};
  EXPECT_THROW(c.validate(), ValidationError);
  const auto full = NetworkConfig::full_preset(10, 2);
  EXPECT_EQ(full.layer_widths, (std::vector<int>{10, 2048, 1024, 256}));
  const auto j = small_config().to_json();
  const auto back = NetworkConfig::from_json(j);
  EXPECT_EQ(back.layer_widths, small_config().layer_widths);
  EXPECT_EQ(back.activations, small_config().activations);
}

TEST(Forward, ZeroWeights) {
  auto p = init_params(small_config(Activation::sigmoid), 1);
  for (auto& w : p.weights) w.setZero();
  p.heads.setZero();
  const auto r = forward(p, Eigen::Vector4d(1, 2, 3, 4));
  EXPECT_EQ(r.value_embedding, Eigen::VectorXd::Constant(3, 0.5));
  EXPECT_EQ(r.outputs, Eigen::VectorXd::Zero(3));
}

TEST(Forward, LinearReduction) {
  NetworkConfig c{{3, 2}, {Activation::linear}, 2, {}};
  auto p = init_params(c, 4);
  p.biases[0] << 0.5, -1.0;
  p.heads.setZero();
  p.heads.col(0).setOnes();
  const Eigen::Vector3d x(1, -2, 0.25);
  const auto r = forward(p, x);
  const double expect = p.weights[0].row(0).dot(x) + 0.5;
  EXPECT_NEAR(r.outputs(0), expect, 1e-14);
  EXPECT_NEAR(r.outputs(1), expect, 1e-14);
}

TEST(Forward, DeterministicAndTimeInvariantEmbedding) {
  std::mt19937_64 rng(3);
  const auto p = init_params(small_config(Activation::relu), 9);
  const Eigen::VectorXd x = random_matrix(4, 1, rng);
  const auto a = forward(p, x), b = forward(p, x);
  EXPECT_EQ(a.outputs, b.outputs);
  // Heads are linear: doubling theta_t doubles H_t.
  auto q = p;
  q.heads.row(1) *= 2.0;
  const auto c = forward(q, x);
  EXPECT_NEAR(c.outputs(1), 2.0 * a.outputs(1), 1e-12);
  EXPECT_EQ(c.outputs(0), a.outputs(0));
  EXPECT_EQ(c.value_embedding, a.value_embedding);
  Eigen::VectorXd bad = x;
  bad(0) = std::nan("");
  EXPECT_THROW(forward(p, bad), ValidationError);
  EXPECT_THROW(forward(p, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST(Loss, Examples) {
  NetworkConfig c{{1, 1}, {Activation::linear}, 1, {}};
  auto p = init_params(c, 1);
  p.weights[0](0, 0) = 1.0;
  p.heads(0, 0) = 1.0;
  LossBatch b{Eigen::MatrixXd::Constant(1, 1, 5.0), Eigen::MatrixXd::Constant(1, 1, 5.0),
              Eigen::MatrixXd::Constant(1, 1, 3.0)};
  EXPECT_DOUBLE_EQ(loss(p, b, 0.0), 0.0);
  b.targets(0, 0) = 7.0;
  EXPECT_DOUBLE_EQ(loss(p, b, 0.0), 12.0);
  b.weights.setZero();
  EXPECT_THROW(loss(p, b, 0.0), UndefinedError);
}

TEST(Loss, FlatPathHasNoPenalty) {
  NetworkConfig c{{2, 3}, {Activation::sigmoid}, 4, {}};
  auto p = init_params(c, 2);
  for (int t = 1; t < 4; ++t) p.heads.row(t) = p.heads.row(0);
  std::mt19937_64 rng(1);
  const auto b = random_batch(c, 6, rng);
  EXPECT_DOUBLE_EQ(loss(p, b, 0.0), loss(p, b, 100.0));
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 24; ++rep) {
    const Activation a = rep % 3 == 0 ? Activation::linear : (rep % 3 == 1 ? Activation::sigmoid : Activation::relu);
    const auto c = small_config(a, 3);
    auto p = init_params(c, 100 + rep);
    for (auto& bias : p.biases) bias = random_matrix(bias.size(), 1, rng, 0.3);
    const auto b = random_batch(c, 5, rng);
    const double lambda = rep % 2 ? 0.7 : 0.0;
    Eigen::VectorXd g;
    loss_and_gradient(p, b, lambda, g);
    auto f = [&](const Eigen::VectorXd& th) {
      auto q = p;
      q.unflatten(th);
      return loss(q, b, lambda);
    };
    EXPECT_LT(max_rel_err(g, numeric_gradient(f, p.flatten())), 1e-4) << "rep " << rep;
  }
}

TEST(Loss, MaskedCellsAreInert) {
  std::mt19937_64 rng(5);
  const auto c = small_config();
  const auto p = init_params(c, 3);
  auto b = random_batch(c, 6, rng);
  b.weights(2, 1) = 0.0;
  Eigen::VectorXd g1, g2;
  const double l1 = loss_and_gradient(p, b, 0.3, g1);
  b.targets(2, 1) = 1e6;
  const double l2 = loss_and_gradient(p, b, 0.3, g2);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(g1, g2);
  b.targets(2, 1) = std::nan("");
  EXPECT_EQ(loss(p, b, 0.3), l1);
}

TEST(Loss, QuantityScaling) {
  std::mt19937_64 rng(6);
  const auto c = small_config();
  const auto p = init_params(c, 3);
  auto b = random_batch(c, 6, rng);
  const double l = loss(p, b, 0.0);
  b.weights *= 2.5;
  EXPECT_NEAR(loss(p, b, 0.0), 2.5 * l, 1e-12 * l);
}

TEST(Loss, ThreadedGradientIsReproducible) {
  std::mt19937_64 rng(7);
  const auto c = small_config(Activation::relu);
  const auto p = init_params(c, 3);
  const auto b = random_batch(c, 40, rng);
  Eigen::VectorXd g1, g3a, g3b;
  loss_and_gradient(p, b, 0.1, g1, nullptr, 1);
  loss_and_gradient(p, b, 0.1, g3a, nullptr, 3);
  loss_and_gradient(p, b, 0.1, g3b, nullptr, 3);
  EXPECT_EQ(g3a, g3b);
  EXPECT_LT((g1 - g3a).norm(), 1e-10 * g1.norm());
}

TEST(Adam, FirstStep) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState s;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g(3);
  g << 2.0, -0.5, 1e-9;
  adam_step(s, x, g, cfg);
  // Bias-corrected moments at step 1 are g and g^2, so dx = -lr g / (|g| + eps).
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(x(i), -cfg.learning_rate * g(i) / (std::fabs(g(i)) + cfg.epsilon), 1e-15);
  EXPECT_NEAR(x(0), -0.01, 1e-10);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientAndPlainSign) {
  AdamConfig cfg;
  AdamState s;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  adam_step(s, x, Eigen::VectorXd::Zero(2), cfg);
  EXPECT_EQ(x, Eigen::VectorXd::Ones(2));
  EXPECT_EQ(s.m, Eigen::VectorXd::Zero(2));

  cfg.beta1 = cfg.beta2 = 0.0;
  cfg.epsilon = 0.0;
  cfg.learning_rate = 0.1;
  AdamState s2;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g(2);
  g << 3.0, -0.2;
  adam_step(s2, y, g, cfg);
  adam_step(s2, y, g, cfg);
  EXPECT_NEAR(y(0), -0.2, 1e-15);
  EXPECT_NEAR(y(1), 0.2, 1e-15);
  g(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(adam_step(s2, y, g, cfg), DivergenceError);
}

TEST(Checkpoint, RoundTripIsBytewise) {
  auto cfg = small_config(Activation::relu, 4);
  cfg.dropout = {0.1, 0.0};
  Checkpoint ck{init_params(cfg, 77), {{"note", "x"}}};
  ck.params.input_shift << 1, 2, 3, 4;
  ck.params.transform = PriceTransform::log;
  std::stringstream a;
  write_checkpoint(a, ck);
  const auto back = read_checkpoint(a);
  EXPECT_EQ(back.params.flatten(), ck.params.flatten());
  EXPECT_EQ(back.params.input_shift, ck.params.input_shift);
  EXPECT_EQ(back.params.transform, PriceTransform::log);
  EXPECT_EQ(back.params.config.dropout, cfg.dropout);
  EXPECT_EQ(back.metadata["note"], "x");
  std::stringstream b;
  write_checkpoint(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 4), "HNET");
  std::istringstream truncated(a.str().substr(0, a.str().size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), ParseError);
}

}  // namespace
}  // namespace hedonic
