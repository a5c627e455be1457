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

#ifndef HEDONIC_DETAIL_BINARY_IO_HPP_
#define HEDONIC_DETAIL_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "hedonic/error.hpp"

// Little-endian scalar encoding, independent of host byte order.
namespace hedonic::detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline void write_f64(std::ostream& os, double v) {
  write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw ParseError("unexpected end of binary stream", 0);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  read_exact(is, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double read_f64(std::istream& is) {
  return std::bit_cast<double>(read_u64(is));
}

inline std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n) read_exact(is, s.data(), n);
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char m[4];
  read_exact(is, m, 4);
  if (std::string(m, 4) != std::string(magic, 4))
    throw ParseError(std::string("bad magic, expected ") + magic, 0);
}

}  // namespace hedonic::detail

#endif  // HEDONIC_DETAIL_BINARY_IO_HPP_
