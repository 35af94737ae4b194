// Copyright 2026 The cbot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cbot/corpus.hpp"

namespace cbot {

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

// Sparse feature map; zero-valued entries are never stored.
using FeatureVector = std::map<std::string, double>;

using Vector = std::vector<double>;

// Maximal runs of non-whitespace; offsets index the input.
std::vector<Token> tokenize(std::string_view text);

// Word vectors. Words missing from the table get a deterministic
// pseudo-random unit vector seeded by hash(lowercased word, fallback_seed).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 50, std::uint64_t fallback_seed = 0);

  // "<word> v1 ... vD" per line; an optional "<count> <D>" header line is skipped.
  static EmbeddingTable load(std::string_view text, std::uint64_t fallback_seed);

  void add(std::string word, Vector v);

  std::size_t dimension() const { return dimension_; }
  std::uint64_t fallback_seed() const { return fallback_seed_; }
  const std::unordered_map<std::string, Vector>& vectors() const { return vectors_; }

  // Exact match, then lowercase match, then hash fallback.
  Vector lookup(std::string_view word) const;
  Vector fallback(std::string_view word) const;

 private:
  std::size_t dimension_;
  std::uint64_t fallback_seed_;
  std::unordered_map<std::string, Vector> vectors_;
};

// Mean of token vectors; zero vector for no tokens.
Vector sentence_vector(std::span<const Token> tokens, const EmbeddingTable& table);

enum class BilouRole { kO, kB, kI, kL, kU };

struct BilouTag {
  BilouRole role = BilouRole::kO;
  std::string entity;  // empty iff role is O

  static BilouTag outside() { return {}; }
  static BilouTag make(BilouRole role, std::string entity) { return {role, std::move(entity)}; }
  // "O", "B-dn", ...
  static BilouTag parse(std::string_view s);
  std::string str() const;

  bool operator==(const BilouTag&) const = default;
};

struct TaggedToken {
  Token token;
  BilouTag tag;
};

// Throws AlignmentError when a span does not start and end on token boundaries.
std::vector<TaggedToken> bilou_encode(const AnnotatedUtterance& utt);

// Total decoding: an I or L with no open entity of the same name starts a new
// entity at that token; an unterminated B/I run closes at its last token.
// Span offsets come from the tokens; values are empty until filled from text.
std::vector<EntitySpan> bilou_decode(std::span<const BilouTag> tags, std::span<const Token> tokens,
                                     std::string_view text = {});

// Binary CRF features for the token at `i`: identity, lowercase, 1-3 char
// prefixes/suffixes, digit flag, +-1 window identities, BOS/EOS, bias.
FeatureVector crf_features(std::span<const Token> tokens, std::size_t i);

// Character unigram + bigram counts over fold_lower(surface). Throws on empty.
FeatureVector char_vector(std::string_view surface);

double euclidean_distance(const FeatureVector& a, const FeatureVector& b);

}  // namespace cbot
