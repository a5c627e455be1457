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

#ifndef HEDONIC_DETAIL_CSV_HPP_
#define HEDONIC_DETAIL_CSV_HPP_

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hedonic/error.hpp"

namespace hedonic::detail {

/// Reads one logical CSV record (RFC 4180 quoting; quoted fields may span
/// lines). `line` is advanced by the number of physical lines consumed.
/// Returns false at end of stream.
inline bool read_csv_record(std::istream& is, std::vector<std::string>& out,
                            std::size_t& line) {
  out.clear();
  std::string field;
  bool in_quotes = false, any = false, field_started = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n') {
      ++line;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      out.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line + 1);
  if (!any) return false;
  ++line;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  out.push_back(std::move(field));
  return true;
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r.push_back('"');
    r.push_back(c);
  }
  r.push_back('"');
  return r;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  // from_chars for double is available in libstdc++ 11.
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

/// Shortest representation that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

/// Fixed-precision rendering for human-facing tables.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace hedonic::detail

#endif  // HEDONIC_DETAIL_CSV_HPP_
