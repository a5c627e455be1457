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

#ifndef HEDONIC_VOCABULARY_HPP_
#define HEDONIC_VOCABULARY_HPP_

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hedonic/error.hpp"

namespace hedonic {

/// Lowercase, drop ASCII punctuation, split on whitespace. Bytes >= 0x80 are
/// kept verbatim so UTF-8 words survive.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Token dictionary. Index 0 is the reserved unknown-word token; the rest are
/// ordered by descending frequency, ties broken lexicographically, so the
/// indices do not depend on corpus order.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> freq)
      : tokens_(std::move(tokens)), freq_(std::move(freq)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t frequency(std::size_t i) const { return freq_.at(i); }
  const std::vector<std::size_t>& frequencies() const { return freq_; }

  bool contains(std::string_view tok) const { return index_.count(std::string(tok)) != 0; }
  std::size_t index_of(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<std::size_t> encode(std::string_view text) const {
    std::vector<std::size_t> ids;
    for (const auto& t : tokenize(text)) ids.push_back(index_of(t));
    return ids;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps tokens seen at least `min_count` times; the rest count towards the
/// unknown token.
inline Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count) {
  if (corpus.empty()) throw PreconditionError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus)
    for (auto& t : tokenize(text)) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  std::size_t unk = 0;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != Vocabulary::kUnkToken)
      kept.emplace_back(tok, n);
    else
      unk += n;
  }
  if (kept.empty()) throw ValidationError("build_vocab: every token was filtered out");
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(Vocabulary::kUnkToken)};
  std::vector<std::size_t> freq{unk};
  for (auto& [tok, n] : kept) {
    tokens.push_back(tok);
    freq.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(freq));
}

}  // namespace hedonic

#endif  // HEDONIC_VOCABULARY_HPP_
