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

#ifndef HEDONIC_CHECKPOINT_HPP_
#define HEDONIC_CHECKPOINT_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "hedonic/detail/binary_io.hpp"
#include "hedonic/error.hpp"
#include "hedonic/network.hpp"

/*
 * Checkpoint layout (little-endian):
 *
 *   "HNET" | u32 version | string header-json |
 *   u32 tensor-count | { string name | u32 rows | u32 cols } * count |
 *   f64 data for each tensor in manifest order, column-major
 *
 * The header holds the network config, the price transform and free-form
 * metadata. Strings are u32-length-prefixed.
 */
namespace hedonic {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {

inline std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensor_manifest(
    const NetworkParams& p, std::vector<Eigen::MatrixXd>& scratch) {
  scratch.clear();
  scratch.reserve(p.biases.size() + 2);
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    out.emplace_back("layer" + std::to_string(l) + ".weight", &p.weights[l]);
    scratch.emplace_back(p.biases[l]);
    out.emplace_back("layer" + std::to_string(l) + ".bias", &scratch.back());
  }
  out.emplace_back("heads", &p.heads);
  scratch.emplace_back(p.input_shift);
  out.emplace_back("input.shift", &scratch.back());
  scratch.emplace_back(p.input_scale);
  out.emplace_back("input.scale", &scratch.back());
  return out;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const NetworkParams& p = ck.params;
  nlohmann::json header = {{"config", p.config.to_json()},
                           {"transform", to_string(p.transform)},
                           {"metadata", ck.metadata}};
  os.write("HNET", 4);
  detail::write_u32(os, kCheckpointVersion);
  detail::write_string(os, header.dump());
  std::vector<Eigen::MatrixXd> scratch;
  const auto manifest = detail::tensor_manifest(p, scratch);
  detail::write_u32(os, static_cast<std::uint32_t>(manifest.size()));
  for (const auto& [name, m] : manifest) {
    detail::write_string(os, name);
    detail::write_u32(os, static_cast<std::uint32_t>(m->rows()));
    detail::write_u32(os, static_cast<std::uint32_t>(m->cols()));
  }
  for (const auto& [name, m] : manifest)
    for (Eigen::Index i = 0; i < m->size(); ++i) detail::write_f64(os, m->data()[i]);
}

inline Checkpoint read_checkpoint(std::istream& is) {
  detail::expect_magic(is, "HNET");
  const std::uint32_t version = detail::read_u32(is);
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(detail::read_string(is));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what(), 0);
  }
  Checkpoint ck;
  ck.params = init_params(NetworkConfig::from_json(header.at("config")), 0);
  ck.params.transform = price_transform_from_string(header.value("transform", "identity"));
  ck.metadata = header.value("metadata", nlohmann::json::object());

  const std::uint32_t count = detail::read_u32(is);
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = detail::read_string(is);
    e.rows = detail::read_u32(is);
    e.cols = detail::read_u32(is);
    entries.push_back(std::move(e));
  }
  std::vector<Eigen::MatrixXd> scratch;
  const auto expected = detail::tensor_manifest(ck.params, scratch);
  if (entries.size() != expected.size())
    throw ParseError("checkpoint tensor count does not match its config", 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& [name, m] = expected[k];
    if (entries[k].name != name || entries[k].rows != m->rows() || entries[k].cols != m->cols())
      throw ParseError("checkpoint tensor '" + entries[k].name + "' does not match config", 0);
  }
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = detail::read_f64(is);
  };
  auto fill_vec = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = detail::read_f64(is);
  };
  for (std::size_t l = 0; l < ck.params.weights.size(); ++l) {
    fill(ck.params.weights[l]);
    fill_vec(ck.params.biases[l]);
  }
  fill(ck.params.heads);
  fill_vec(ck.params.input_shift);
  fill_vec(ck.params.input_scale);
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_checkpoint(os, ck);
  if (!os) throw Error("failed writing " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_checkpoint(is);
}

}  // namespace hedonic

#endif  // HEDONIC_CHECKPOINT_HPP_
