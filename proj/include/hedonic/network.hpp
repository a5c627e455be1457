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
 * @file network.hpp
 * @brief Multi-task price network: a shared trunk maps product features to a
 *        value embedding V, and one linear head per period maps V to that
 *        period's price, H_t = theta_t' V.
 *
 * The training objective over a set of products is
 *
 *   sum_t sum_i Q_it (y_it - theta_t' V_i)^2
 *     + lambda * sum_i sum_{t<T-1} |theta_{t+1}' V_i - theta_t' V_i|
 *
 * where unobserved cells carry Q_it = 0. Gradients are computed analytically;
 * the L1 term uses subgradient 0 at exact ties.
 */

#ifndef HEDONIC_NETWORK_HPP_
#define HEDONIC_NETWORK_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hedonic/activation.hpp"
#include "hedonic/detail/parallel.hpp"
#include "hedonic/error.hpp"

namespace hedonic {

enum class PriceTransform { identity, log };

inline std::string to_string(PriceTransform t) {
  return t == PriceTransform::log ? "log" : "identity";
}

inline PriceTransform price_transform_from_string(const std::string& s) {
  if (s == "identity") return PriceTransform::identity;
  if (s == "log") return PriceTransform::log;
  throw ValidationError("unknown price transform '" + s + "'");
}

struct NetworkConfig {
  /// input width, hidden widths..., the last entry is the value dimension p.
  std::vector<int> layer_widths;
  /// One activation per hidden layer.
  std::vector<Activation> activations;
  int periods = 1;
  /// Optional per-hidden-layer dropout fraction in [0, 1).
  std::vector<double> dropout;

  int input_dim() const { return layer_widths.empty() ? 0 : layer_widths.front(); }
  int value_dim() const { return layer_widths.empty() ? 0 : layer_widths.back(); }
  int hidden_layers() const { return static_cast<int>(layer_widths.size()) - 1; }

  void validate() const {
    const int m = hidden_layers();
    if (m < 1 || m > 3) throw ValidationError("network needs between 1 and 3 hidden layers");
    for (int w : layer_widths)
      if (w < 1) throw ValidationError("layer widths must be positive");
    if (value_dim() > 512) throw ValidationError("value embedding dimension must be <= 512");
    if (periods < 1) throw ValidationError("network needs at least one period");
    if (static_cast<int>(activations.size()) != m)
      throw ValidationError("need exactly one activation per hidden layer");
    if (!dropout.empty()) {
      if (static_cast<int>(dropout.size()) != m)
        throw ValidationError("dropout must list one rate per hidden layer");
      for (double r : dropout)
        if (!(r >= 0.0 && r < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    }
  }

  /// Scaled-down three-layer shape used by default: input -> 128 -> 64 -> 32.
  static NetworkConfig desk_preset(int input_dim, int periods) {
    return {{input_dim, 128, 64, 32},
            {Activation::relu, Activation::relu, Activation::relu},
            periods,
            {}};
  }

  /// Full-size widths 2048 / 1024 / 256.
  static NetworkConfig full_preset(int input_dim, int periods) {
    return {{input_dim, 2048, 1024, 256},
            {Activation::relu, Activation::relu, Activation::relu},
            periods,
            {}};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["layer_widths"] = layer_widths;
    std::vector<std::string> acts;
    for (auto a : activations) acts.push_back(to_string(a));
    j["activations"] = acts;
    j["periods"] = periods;
    j["dropout"] = dropout;
    return j;
  }

  static NetworkConfig from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.layer_widths = j.at("layer_widths").get<std::vector<int>>();
    for (const auto& a : j.at("activations")) c.activations.push_back(activation_from_string(a.get<std::string>()));
    c.periods = j.at("periods").get<int>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<std::vector<double>>();
    c.validate();
    return c;
  }
};

/// Trunk weights (layer l maps width[l] -> width[l+1]; W_l is out x in),
/// per-period heads (T x p), and the input standardisation applied before
/// the first layer: x -> (x - input_shift) ./ input_scale.
struct NetworkParams {
  NetworkConfig config;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd heads;
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;
  PriceTransform transform = PriceTransform::identity;

  std::size_t parameter_count() const {
    std::size_t n = static_cast<std::size_t>(heads.size());
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return n;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    return heads.allFinite();
  }

  /// Trainable parameters as one vector: W_0, b_0, W_1, b_1, ..., heads,
  /// each matrix column-major.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index o = 0;
    auto put = [&](const auto& m) {
      v.segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      o += m.size();
    };
    for (std::size_t l = 0; l < weights.size(); ++l) {
      put(weights[l]);
      put(biases[l]);
    }
    put(heads);
    return v;
  }

  void unflatten(const Eigen::VectorXd& v) {
    if (v.size() != static_cast<Eigen::Index>(parameter_count()))
      throw DimensionError("parameter vector length mismatch");
    Eigen::Index o = 0;
    auto get = [&](auto& m) {
      Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = v.segment(o, m.size());
      o += m.size();
    };
    for (std::size_t l = 0; l < weights.size(); ++l) {
      get(weights[l]);
      get(biases[l]);
    }
    get(heads);
  }
};

/// Symmetric uniform fan-in initialisation: U(-a, a) with a = sqrt(6 / fan_in)
/// for ReLU layers and sqrt(3 / fan_in) otherwise; heads use sqrt(3 / p).
inline NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkParams p;
  p.config = cfg;
  std::mt19937_64 rng(seed);
  const int m = cfg.hidden_layers();
  for (int l = 0; l < m; ++l) {
    const int in = cfg.layer_widths[l], out = cfg.layer_widths[l + 1];
    const double gain = cfg.activations[l] == Activation::relu ? 6.0 : 3.0;
    std::uniform_real_distribution<double> u(-std::sqrt(gain / in), std::sqrt(gain / in));
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  std::uniform_real_distribution<double> u(-std::sqrt(3.0 / cfg.value_dim()),
                                           std::sqrt(3.0 / cfg.value_dim()));
  p.heads.resize(cfg.periods, cfg.value_dim());
  for (Eigen::Index c = 0; c < p.heads.cols(); ++c)
    for (Eigen::Index r = 0; r < p.heads.rows(); ++r) p.heads(r, c) = u(rng);
  p.input_shift = Eigen::VectorXd::Zero(cfg.input_dim());
  p.input_scale = Eigen::VectorXd::Ones(cfg.input_dim());
  return p;
}

/// Value embeddings for a batch: rows of `x` are products. Dropout is never
/// applied here.
inline Eigen::MatrixXd value_embeddings(const NetworkParams& p, const Eigen::MatrixXd& x) {
  if (x.cols() != p.config.input_dim())
    throw DimensionError("feature width " + std::to_string(x.cols()) + " does not match network input " +
                         std::to_string(p.config.input_dim()));
  if (!x.allFinite()) throw ValidationError("network input contains non-finite values");
  Eigen::MatrixXd h =
      (x.rowwise() - p.input_shift.transpose()).array().rowwise() / p.input_scale.transpose().array();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Eigen::MatrixXd z = (h * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
    h = activate(p.config.activations[l], z);
  }
  return h;
}

struct ForwardResult {
  Eigen::VectorXd value_embedding;  // V, length p
  Eigen::VectorXd outputs;          // theta_t' V for every t (transformed scale)
};

inline ForwardResult forward(const NetworkParams& p, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd v = value_embeddings(p, x.transpose());
  return {v.row(0).transpose(), p.heads * v.row(0).transpose()};
}

/// Maps head outputs back to prices (exp for the log transform).
inline double to_price(PriceTransform t, double output) {
  return t == PriceTransform::log ? std::exp(output) : output;
}

inline double from_price(PriceTransform t, double price) {
  return t == PriceTransform::log ? std::log(price) : price;
}

/// Training data for the loss: row i is a product. `weights` holds Q_it on
/// observed cells and exactly 0 on masked ones; `targets` is ignored where
/// the weight is 0.
struct LossBatch {
  Eigen::MatrixXd features;  // n x input
  Eigen::MatrixXd targets;   // n x T
  Eigen::MatrixXd weights;   // n x T
};

/// Inverted-dropout masks, one n x width matrix per hidden layer.
using DropoutMasks = std::vector<Eigen::MatrixXd>;

inline DropoutMasks sample_dropout(const NetworkConfig& cfg, Eigen::Index rows, std::mt19937_64& rng) {
  DropoutMasks masks;
  if (cfg.dropout.empty()) return masks;
  for (int l = 0; l < cfg.hidden_layers(); ++l) {
    const double rate = cfg.dropout[l];
    Eigen::MatrixXd m(rows, cfg.layer_widths[l + 1]);
    std::bernoulli_distribution keep(1.0 - rate);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

namespace detail {

/// Loss and flat gradient contribution of rows [begin, end).
inline double loss_rows(const NetworkParams& p, const LossBatch& b, double lambda,
                        Eigen::Index begin, Eigen::Index end, Eigen::VectorXd* grad,
                        const DropoutMasks* masks) {
  const Eigen::Index n = end - begin;
  if (n <= 0) return 0.0;
  const std::size_t m = p.weights.size();
  const Eigen::MatrixXd x = b.features.middleRows(begin, n);
  std::vector<Eigen::MatrixXd> pre(m), post(m + 1);
  post[0] = (x.rowwise() - p.input_shift.transpose()).array().rowwise() /
            p.input_scale.transpose().array();
  for (std::size_t l = 0; l < m; ++l) {
    pre[l] = (post[l] * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
    post[l + 1] = activate(p.config.activations[l], pre[l]);
    if (masks && !masks->empty())
      post[l + 1].array() *= (*masks)[l].middleRows(begin, n).array();
  }
  const Eigen::MatrixXd& v = post[m];
  const Eigen::MatrixXd out = v * p.heads.transpose();  // n x T
  const Eigen::MatrixXd w = b.weights.middleRows(begin, n);
  // Masked targets may hold anything (even NaN); zero them out explicitly.
  const Eigen::MatrixXd resid =
      (w.array() > 0.0).select(b.targets.middleRows(begin, n) - out, 0.0);
  double loss = (w.array() * resid.array().square()).sum();
  const Eigen::Index T = out.cols();
  Eigen::MatrixXd g_out = -2.0 * (w.array() * resid.array()).matrix();
  if (lambda != 0.0 && T > 1) {
    const Eigen::MatrixXd diff = out.rightCols(T - 1) - out.leftCols(T - 1);
    loss += lambda * diff.array().abs().sum();
    const Eigen::MatrixXd s = diff.unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); });
    g_out.rightCols(T - 1) += lambda * s;
    g_out.leftCols(T - 1) -= lambda * s;
  }
  if (grad == nullptr) return loss;

  Eigen::VectorXd& g = *grad;
  // Offsets into the flat layout.
  std::vector<Eigen::Index> w_off(m), b_off(m);
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < m; ++l) {
    w_off[l] = o;
    o += p.weights[l].size();
    b_off[l] = o;
    o += p.biases[l].size();
  }
  const Eigen::Index h_off = o;
  {
    Eigen::Map<Eigen::MatrixXd> gh(g.data() + h_off, p.heads.rows(), p.heads.cols());
    gh.noalias() += g_out.transpose() * v;
  }
  Eigen::MatrixXd delta = g_out * p.heads;  // dL/dV, n x p
  for (std::size_t li = m; li-- > 0;) {
    if (masks && !masks->empty()) delta.array() *= (*masks)[li].middleRows(begin, n).array();
    const Activation a = p.config.activations[li];
    if (a != Activation::linear) {
      for (Eigen::Index c = 0; c < delta.cols(); ++c)
        for (Eigen::Index r = 0; r < delta.rows(); ++r)
          delta(r, c) *= activation_slope(a, pre[li](r, c), activate(a, pre[li](r, c)));
    }
    Eigen::Map<Eigen::MatrixXd> gw(g.data() + w_off[li], p.weights[li].rows(), p.weights[li].cols());
    gw.noalias() += delta.transpose() * post[li];
    g.segment(b_off[li], p.biases[li].size()) += delta.colwise().sum().transpose();
    if (li > 0) delta = delta * p.weights[li];
  }
  return loss;
}

inline void check_batch(const NetworkParams& p, const LossBatch& b) {
  const Eigen::Index n = b.features.rows();
  if (b.features.cols() != p.config.input_dim())
    throw DimensionError("loss: feature width does not match the network input");
  if (b.targets.rows() != n || b.weights.rows() != n || b.targets.cols() != p.config.periods ||
      b.weights.cols() != p.config.periods)
    throw DimensionError("loss: targets/weights must be n x T");
  if ((b.weights.array() < 0.0).any()) throw ValidationError("loss: negative quantity weight");
  if (!(b.weights.array() > 0.0).any())
    throw UndefinedError("loss: degenerate batch with no observed prices");
}

}  // namespace detail

/// Objective value on a batch (no dropout).
inline double loss(const NetworkParams& p, const LossBatch& b, double lambda) {
  detail::check_batch(p, b);
  const double v = detail::loss_rows(p, b, lambda, 0, b.features.rows(), nullptr, nullptr);
  if (!std::isfinite(v)) throw DivergenceError("loss is not finite", -1);
  return v;
}

/// Objective value plus its gradient in the `NetworkParams::flatten` layout.
/// Rows are split into `threads` contiguous chunks whose partial sums are
/// added in chunk order.
inline double loss_and_gradient(const NetworkParams& p, const LossBatch& b, double lambda,
                                Eigen::VectorXd& grad, const DropoutMasks* masks = nullptr,
                                std::size_t threads = 1) {
  detail::check_batch(p, b);
  using Acc = std::pair<double, Eigen::VectorXd>;
  const auto np = static_cast<Eigen::Index>(p.parameter_count());
  Acc acc = detail::ordered_reduce(
      static_cast<std::size_t>(b.features.rows()), threads, Acc{0.0, Eigen::VectorXd::Zero(np)},
      [&](Acc& a, std::size_t lo, std::size_t hi) {
        a.first += detail::loss_rows(p, b, lambda, static_cast<Eigen::Index>(lo),
                                     static_cast<Eigen::Index>(hi), &a.second, masks);
      },
      [](Acc& a, const Acc& part) {
        a.first += part.first;
        a.second += part.second;
      });
  grad = std::move(acc.second);
  return acc.first;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` (in place).
inline void adam_step(AdamState& s, Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                      const AdamConfig& cfg) {
  if (grad.size() != params.size()) throw DimensionError("adam: gradient length mismatch");
  if (!grad.allFinite()) throw DivergenceError("non-finite gradient", -1);
  if (s.m.size() == 0) {
    s.m = Eigen::VectorXd::Zero(params.size());
    s.v = Eigen::VectorXd::Zero(params.size());
  }
  if (s.m.size() != params.size()) throw DimensionError("adam: state length mismatch");
  ++s.step;
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * grad;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  params.array() -= cfg.learning_rate * (s.m.array() / c1) /
                    ((s.v.array() / c2).sqrt() + cfg.epsilon);
}

}  // namespace hedonic

#endif  // HEDONIC_NETWORK_HPP_
