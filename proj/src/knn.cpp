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

#include "cbot/knn.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "cbot/error.hpp"
#include "cbot/utf8.hpp"
#include "cbot/util.hpp"

namespace cbot::knn {
namespace {

const std::map<char32_t, std::string_view>& qwerty_neighbours() {
  static const std::map<char32_t, std::string_view> m = {
      {'q', "wa"},   {'w', "qeas"},  {'e', "wrsd"},  {'r', "etdf"},   {'t', "ryfg"},   {'y', "tugh"},
      {'u', "yihj"}, {'i', "uojk"},  {'o', "ipkl"},  {'p', "ol"},     {'a', "qwsz"},   {'s', "awedxz"},
      {'d', "serfcx"}, {'f', "drtgvc"}, {'g', "ftyhbv"}, {'h', "gyujnb"}, {'j', "huikmn"}, {'k', "jiolm"},
      {'l', "kop"},  {'z', "asx"},   {'x', "zsdc"},  {'c', "xdfv"},   {'v', "cfgb"},   {'b', "vghn"},
      {'n', "bhjm"}, {'m', "njk"},
  };
  return m;
}

bool is_consonant(char32_t cp) {
  const char32_t c = utf8::fold(utf8::to_lower(cp));
  if (c < 'a' || c > 'z') return false;
  return c != 'a' && c != 'e' && c != 'i' && c != 'o' && c != 'u' && c != 'y';
}

using Chars = std::vector<char32_t>;

std::optional<Chars> delete_char(Chars s, Rng& rng) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != ' ') pos.push_back(i);
  if (pos.size() < 2) return std::nullopt;
  s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos[rng.index(pos.size())]));
  return s;
}

std::optional<Chars> substitute_adjacent_key(Chars s, Rng& rng) {
  const auto& keys = qwerty_neighbours();
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (keys.count(utf8::fold(utf8::to_lower(s[i])))) pos.push_back(i);
  if (pos.empty()) return std::nullopt;
  const std::size_t i = pos[rng.index(pos.size())];
  const std::string_view nb = keys.at(utf8::fold(utf8::to_lower(s[i])));
  s[i] = static_cast<char32_t>(nb[rng.index(nb.size())]);
  return s;
}

std::optional<Chars> transpose_adjacent(Chars s, Rng& rng) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i] != s[i + 1] && s[i] != ' ' && s[i + 1] != ' ') pos.push_back(i);
  if (pos.empty()) return std::nullopt;
  const std::size_t i = pos[rng.index(pos.size())];
  std::swap(s[i], s[i + 1]);
  return s;
}

std::optional<Chars> drop_final_consonant(Chars s, Rng& rng) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool word_end = i + 1 == s.size() || s[i + 1] == ' ';
    const bool long_word = i > 0 && s[i - 1] != ' ';
    if (word_end && long_word && is_consonant(s[i])) pos.push_back(i);
  }
  if (pos.empty()) return std::nullopt;
  s.erase(s.begin() + static_cast<std::ptrdiff_t>(pos[rng.index(pos.size())]));
  return s;
}

std::optional<Chars> apply(CorruptionRule rule, const Chars& s, Rng& rng) {
  switch (rule) {
    case CorruptionRule::kDeleteChar: return delete_char(s, rng);
    case CorruptionRule::kSubstituteAdjacentKey: return substitute_adjacent_key(s, rng);
    case CorruptionRule::kTransposeAdjacent: return transpose_adjacent(s, rng);
    case CorruptionRule::kDropFinalConsonant: return drop_final_consonant(s, rng);
    case CorruptionRule::kStripDiacritics: {
      Chars out = s;
      for (auto& c : out) c = utf8::fold(c);
      return out;
    }
  }
  return std::nullopt;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<double> distances_impl(const KnnIndex& index, const FeatureVector& query, bool parallel) {
  std::vector<double> d(index.points.size());
  const auto n = static_cast<std::ptrdiff_t>(d.size());
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = euclidean_distance(index.points[i].vector, query);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = euclidean_distance(index.points[i].vector, query);
  }
  return d;
}

}  // namespace

EntityLexicon EntityLexicon::parse(std::string_view text) {
  EntityLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  std::set<std::pair<std::string, std::string>> seen;
  while (std::getline(in, line)) {
    ++number;
    std::string_view t = trim_view(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t tab = t.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected 'entity<TAB>value'", number);
    std::string entity(trim_view(t.substr(0, tab)));
    std::string value = regex_normalize(t.substr(tab + 1));
    if (entity.empty() || value.empty()) throw ParseError("empty entity name or value", number);
    if (!seen.emplace(entity, value).second) continue;
    lex.entries.push_back({std::move(value), std::move(entity)});
  }
  return lex;
}

EntityLexicon EntityLexicon::from_intents(const std::vector<IntentDef>& intents) {
  EntityLexicon lex;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& intent : intents)
    for (const auto& p : intent.patterns)
      for (const auto& s : p.spans) {
        std::string v = regex_normalize(s.value);
        if (!v.empty() && seen.emplace(s.entity_name, v).second) lex.entries.push_back({v, s.entity_name});
      }
  return lex;
}

void EntityLexicon::merge(const EntityLexicon& other) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) seen.emplace(e.entity_name, e.value);
  for (const auto& e : other.entries)
    if (seen.emplace(e.entity_name, e.value).second) entries.push_back(e);
}

std::string rule_name(CorruptionRule rule) {
  switch (rule) {
    case CorruptionRule::kStripDiacritics: return "strip_diacritics";
    case CorruptionRule::kDeleteChar: return "delete_char";
    case CorruptionRule::kSubstituteAdjacentKey: return "substitute_adjacent_key";
    case CorruptionRule::kTransposeAdjacent: return "transpose_adjacent";
    case CorruptionRule::kDropFinalConsonant: return "drop_final_consonant";
  }
  return "";
}

CorruptionRule parse_rule(std::string_view name) {
  for (auto r : {CorruptionRule::kStripDiacritics, CorruptionRule::kDeleteChar, CorruptionRule::kSubstituteAdjacentKey,
                 CorruptionRule::kTransposeAdjacent, CorruptionRule::kDropFinalConsonant})
    if (rule_name(r) == name) return r;
  throw Error("unknown corruption rule '" + std::string(name) + "'");
}

bool CorruptionSpec::enabled(CorruptionRule r) const { return std::find(rules.begin(), rules.end(), r) != rules.end(); }

std::vector<std::string> generate_corruptions(std::string_view value, const CorruptionSpec& spec) {
  if (value.empty()) throw Error("cannot corrupt an empty value");
  if (spec.rules.empty()) throw Error("corruption spec enables no rules");
  std::vector<std::string> out;
  std::set<std::string> seen{std::string(value)};
  const Chars original = utf8::decode(value);
  const bool strip = spec.enabled(CorruptionRule::kStripDiacritics);
  Chars stripped = original;
  for (auto& c : stripped) c = utf8::fold(c);

  if (strip && spec.variants_per_value > 0) {
    std::string s = utf8::encode(stripped);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  std::vector<CorruptionRule> typo;
  for (auto r : spec.rules)
    if (r != CorruptionRule::kStripDiacritics && std::find(typo.begin(), typo.end(), r) == typo.end())
      typo.push_back(r);
  if (typo.empty()) return out;

  Rng rng(hash_combine(fnv1a(value), spec.seed));
  const std::size_t budget = 20 * spec.variants_per_value;
  for (std::size_t attempt = 0; attempt < budget && out.size() < spec.variants_per_value; ++attempt) {
    const Chars& base = (strip && rng.index(2) == 1) ? stripped : original;
    const CorruptionRule rule = typo[rng.index(typo.size())];
    auto result = apply(rule, base, rng);
    if (!result || result->empty()) continue;
    std::string s = utf8::encode(*result);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::string regex_normalize(std::string_view surface) {
  static const std::regex spaces(R"(\s+)");
  static const std::regex edges(R"(^[\s[:punct:]]+|[\s[:punct:]]+$)");
  std::string s = utf8::to_lower(surface);
  s = std::regex_replace(s, spaces, " ");
  s = std::regex_replace(s, edges, "");
  return s;
}

KnnIndex build_index(const EntityLexicon& lexicon, const CorruptionSpec& spec, std::size_t k, double reject_radius) {
  if (lexicon.entries.empty()) throw Error("entity lexicon is empty");
  if (k == 0) throw Error("k must be at least 1");
  if (!(reject_radius > 0)) throw Error("reject radius must be positive");
  KnnIndex index;
  index.k = k;
  index.reject_radius = reject_radius;

  std::vector<std::string> canonicals;
  std::set<std::string> unique;
  for (const auto& e : lexicon.entries) {
    std::string v = regex_normalize(e.value);
    if (!v.empty() && unique.insert(v).second) canonicals.push_back(v);
  }
  std::set<std::string> canonical_keys;
  for (const auto& v : canonicals) canonical_keys.insert(utf8::fold_lower(v));

  for (const auto& v : canonicals) {
    index.points.push_back({v, char_vector(v), v});
    for (const auto& c : generate_corruptions(v, spec)) {
      const std::string norm = regex_normalize(c);
      if (norm.empty()) continue;
      const std::string key = utf8::fold_lower(norm);
      // A corruption that lands on another canonical value would outvote it.
      if (key != utf8::fold_lower(v) && canonical_keys.count(key)) continue;
      index.points.push_back({c, char_vector(norm), v});
    }
  }
  return index;
}

std::vector<double> distances(const KnnIndex& index, const FeatureVector& query) {
  return distances_impl(index, query, true);
}

namespace reference {
std::vector<double> distances(const KnnIndex& index, const FeatureVector& query) {
  return distances_impl(index, query, false);
}
}  // namespace reference

NormalizationResult normalize_entity(const KnnIndex& index, std::string_view surface) {
  return normalize_entity(index, surface, index.k);
}

NormalizationResult normalize_entity(const KnnIndex& index, std::string_view surface, std::size_t k) {
  NormalizationResult r;
  const std::string q = regex_normalize(surface);
  if (q.empty() || index.points.empty()) return r;
  const auto d = distances(index, char_vector(q));
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  r.nearest_distance = d[order[0]];
  if (r.nearest_distance > index.reject_radius) return r;

  std::size_t take = std::min(std::max<std::size_t>(k, 1), order.size());
  if (r.nearest_distance == 0.0) {
    take = 0;
    while (take < order.size() && d[order[take]] == 0.0) ++take;
  }
  struct Tally {
    std::size_t votes = 0;
    double sum = 0;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t i = 0; i < take; ++i) {
    auto& t = tally[index.points[order[i]].canonical];
    ++t.votes;
    t.sum += d[order[i]];
  }
  const std::string* best = nullptr;
  double best_mean = 0;
  std::size_t best_votes = 0;
  for (const auto& [label, t] : tally) {
    const double mean = t.sum / static_cast<double>(t.votes);
    if (!best || t.votes > best_votes || (t.votes == best_votes && mean < best_mean)) {
      best = &label;
      best_votes = t.votes;
      best_mean = mean;
    }
  }
  r.value = *best;
  r.mean_distance = best_mean;
  return r;
}

std::vector<LabeledSurface> make_eval_set(const EntityLexicon& lexicon, const CorruptionSpec& spec) {
  std::vector<LabeledSurface> out;
  std::set<std::string> unique;
  for (const auto& e : lexicon.entries) {
    const std::string v = regex_normalize(e.value);
    if (v.empty() || !unique.insert(v).second) continue;
    for (auto& c : generate_corruptions(v, spec)) out.push_back({std::move(c), v});
  }
  return out;
}

KSweepResult k_sweep(const KnnIndex& index, std::span<const LabeledSurface> eval, const std::vector<std::size_t>& ks) {
  KSweepResult result;
  for (std::size_t k : ks)
    if (k == 0 || k > index.points.size())
      throw Error("k = " + std::to_string(k) + " exceeds the index size " + std::to_string(index.points.size()));
  double best = -1;
  for (std::size_t k : ks) {
    std::size_t correct = 0;
    for (const auto& ex : eval) {
      const auto r = normalize_entity(index, ex.surface, k);
      if (r.value && *r.value == ex.canonical) ++correct;
    }
    const double acc = eval.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(eval.size());
    result.rows.push_back({k, acc});
    if (acc > best) {
      best = acc;
      result.best_k = k;
    }
  }
  return result;
}

}  // namespace cbot::knn
