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

#include "cbot/text.hpp"

#include <cmath>
#include <sstream>

#include "cbot/error.hpp"
#include "cbot/utf8.hpp"
#include "cbot/util.hpp"

namespace cbot {

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && utf8::is_ascii_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !utf8::is_ascii_space(text[j])) ++j;
    tokens.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

EmbeddingTable::EmbeddingTable(std::size_t dimension, std::uint64_t fallback_seed)
    : dimension_(dimension), fallback_seed_(fallback_seed) {
  if (dimension == 0) throw Error("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::load(std::string_view text, std::uint64_t fallback_seed) {
  std::vector<std::pair<std::string, Vector>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t dim = 0;
  bool first = true;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    Vector v;
    double x;
    while (ls >> x) v.push_back(x);
    if (first) {
      first = false;
      // "<count> <D>" header
      if (v.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) continue;
    }
    if (v.empty()) throw ParseError("word vector line has no values", number);
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw ParseError("word vector for '" + word + "' has " + std::to_string(v.size()) +
                           " values, expected " + std::to_string(dim),
                       number);
    rows.emplace_back(std::move(word), std::move(v));
  }
  if (dim == 0) throw Error("word vector file is empty");
  EmbeddingTable table(dim, fallback_seed);
  for (auto& [w, v] : rows) table.add(std::move(w), std::move(v));
  return table;
}

void EmbeddingTable::add(std::string word, Vector v) {
  if (v.size() != dimension_) throw Error("vector for '" + word + "' has wrong dimension");
  vectors_[std::move(word)] = std::move(v);
}

Vector EmbeddingTable::fallback(std::string_view word) const {
  const std::uint64_t seed = hash_combine(fnv1a(utf8::to_lower(word)), fallback_seed_);
  Vector v(dimension_);
  double norm = 0.0;
  for (std::size_t i = 0; i < dimension_; ++i) {
    const std::uint64_t x = mix64(seed + i);
    v[i] = static_cast<double>(x >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  if (norm > 0)
    for (auto& x : v) x /= norm;
  return v;
}

Vector EmbeddingTable::lookup(std::string_view word) const {
  if (auto it = vectors_.find(std::string(word)); it != vectors_.end()) return it->second;
  if (auto it = vectors_.find(utf8::to_lower(word)); it != vectors_.end()) return it->second;
  return fallback(word);
}

Vector sentence_vector(std::span<const Token> tokens, const EmbeddingTable& table) {
  Vector mean(table.dimension(), 0.0);
  if (tokens.empty()) return mean;
  for (const auto& t : tokens) {
    const Vector v = table.lookup(t.surface);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
  }
  for (auto& x : mean) x /= static_cast<double>(tokens.size());
  return mean;
}

BilouTag BilouTag::parse(std::string_view s) {
  if (s == "O") return outside();
  if (s.size() < 3 || s[1] != '-') throw Error("malformed BILOU tag '" + std::string(s) + "'");
  BilouRole role;
  switch (s[0]) {
    case 'B': role = BilouRole::kB; break;
    case 'I': role = BilouRole::kI; break;
    case 'L': role = BilouRole::kL; break;
    case 'U': role = BilouRole::kU; break;
    default: throw Error("malformed BILOU tag '" + std::string(s) + "'");
  }
  return make(role, std::string(s.substr(2)));
}

std::string BilouTag::str() const {
  switch (role) {
    case BilouRole::kO: return "O";
    case BilouRole::kB: return "B-" + entity;
    case BilouRole::kI: return "I-" + entity;
    case BilouRole::kL: return "L-" + entity;
    case BilouRole::kU: return "U-" + entity;
  }
  return "O";
}

std::vector<TaggedToken> bilou_encode(const AnnotatedUtterance& utt) {
  const auto tokens = tokenize(utt.text);
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back({t, BilouTag::outside()});
  for (const auto& span : utt.spans) {
    std::size_t first = tokens.size(), last = tokens.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].start == span.start) first = i;
      if (tokens[i].end == span.end) last = i;
    }
    if (first == tokens.size() || last == tokens.size() || last < first)
      throw AlignmentError("entity '" + span.value + "' (" + span.entity_name + ") at bytes [" +
                           std::to_string(span.start) + ", " + std::to_string(span.end) +
                           ") does not align with token boundaries");
    if (first == last) {
      out[first].tag = BilouTag::make(BilouRole::kU, span.entity_name);
      continue;
    }
    out[first].tag = BilouTag::make(BilouRole::kB, span.entity_name);
    for (std::size_t i = first + 1; i < last; ++i) out[i].tag = BilouTag::make(BilouRole::kI, span.entity_name);
    out[last].tag = BilouTag::make(BilouRole::kL, span.entity_name);
  }
  return out;
}

std::vector<EntitySpan> bilou_decode(std::span<const BilouTag> tags, std::span<const Token> tokens,
                                     std::string_view text) {
  if (tags.size() != tokens.size()) throw Error("tag and token counts differ");
  std::vector<EntitySpan> spans;
  auto emit = [&](std::size_t first, std::size_t last, const std::string& entity) {
    EntitySpan s;
    s.start = tokens[first].start;
    s.end = tokens[last].end;
    s.entity_name = entity;
    if (!text.empty() && s.end <= text.size()) {
      s.value = std::string(text.substr(s.start, s.end - s.start));
    } else {
      for (std::size_t k = first; k <= last; ++k) s.value += (k > first ? " " : "") + tokens[k].surface;
    }
    spans.push_back(std::move(s));
  };

  bool open = false;
  std::size_t open_start = 0;
  std::string open_entity;
  auto close_at = [&](std::size_t last) {
    if (open) emit(open_start, last, open_entity);
    open = false;
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BilouTag& tag = tags[i];
    switch (tag.role) {
      case BilouRole::kO:
        if (open) close_at(i - 1);
        break;
      case BilouRole::kU:
        if (open) close_at(i - 1);
        emit(i, i, tag.entity);
        break;
      case BilouRole::kB:
        if (open) close_at(i - 1);
        open = true;
        open_start = i;
        open_entity = tag.entity;
        break;
      case BilouRole::kI:
        if (open && open_entity == tag.entity) break;
        if (open) close_at(i - 1);
        open = true;
        open_start = i;
        open_entity = tag.entity;
        break;
      case BilouRole::kL:
        if (open && open_entity == tag.entity) {
          close_at(i);
          break;
        }
        if (open) close_at(i - 1);
        emit(i, i, tag.entity);
        break;
    }
  }
  if (open) close_at(tags.size() - 1);
  return spans;
}

FeatureVector crf_features(std::span<const Token> tokens, std::size_t i) {
  FeatureVector f;
  const Token& tok = tokens[i];
  const std::string lower = utf8::to_lower(tok.surface);
  const auto cps = utf8::decode(lower);

  f["bias"] = 1.0;
  f["word=" + tok.surface] = 1.0;
  f["lower=" + lower] = 1.0;
  for (std::size_t n = 1; n <= 3 && n <= cps.size(); ++n) {
    f["prefix" + std::to_string(n) + "=" + utf8::encode(std::vector<char32_t>(cps.begin(), cps.begin() + n))] = 1.0;
    f["suffix" + std::to_string(n) + "=" + utf8::encode(std::vector<char32_t>(cps.end() - n, cps.end()))] = 1.0;
  }
  for (char c : tok.surface) {
    if (c >= '0' && c <= '9') {
      f["has_digit"] = 1.0;
      break;
    }
  }
  if (i == 0)
    f["BOS"] = 1.0;
  else
    f["prev_word=" + utf8::to_lower(tokens[i - 1].surface)] = 1.0;
  if (i + 1 == tokens.size())
    f["EOS"] = 1.0;
  else
    f["next_word=" + utf8::to_lower(tokens[i + 1].surface)] = 1.0;
  return f;
}

FeatureVector char_vector(std::string_view surface) {
  if (surface.empty()) throw Error("char_vector of an empty string");
  const auto cps = utf8::decode(utf8::fold_lower(surface));
  FeatureVector f;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    f[utf8::encode(cps[i])] += 1.0;
    if (i + 1 < cps.size()) f[utf8::encode(cps[i]) + utf8::encode(cps[i + 1])] += 1.0;
  }
  return f;
}

double euclidean_distance(const FeatureVector& a, const FeatureVector& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    double d;
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      d = ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      d = ib->second;
      ++ib;
    } else {
      d = ia->second - ib->second;
      ++ia;
      ++ib;
    }
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace cbot
