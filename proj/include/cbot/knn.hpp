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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbot/text.hpp"

// Entity spelling normalization: nearest neighbours over character
// n-gram vectors of canonical values and their generated corruptions.
namespace cbot::knn {

struct LexiconEntry {
  std::string value;
  std::string entity_name;

  bool operator==(const LexiconEntry&) const = default;
};

struct EntityLexicon {
  std::vector<LexiconEntry> entries;

  // "entity_name<TAB>value" per line, values regex-normalized; blank and '#' lines skipped.
  static EntityLexicon parse(std::string_view text);
  // Unique span values of the annotated corpus.
  static EntityLexicon from_intents(const std::vector<IntentDef>& intents);
  void merge(const EntityLexicon& other);
};

enum class CorruptionRule { kStripDiacritics, kDeleteChar, kSubstituteAdjacentKey, kTransposeAdjacent, kDropFinalConsonant };

std::string rule_name(CorruptionRule rule);
CorruptionRule parse_rule(std::string_view name);

struct CorruptionSpec {
  std::vector<CorruptionRule> rules = {CorruptionRule::kStripDiacritics, CorruptionRule::kDeleteChar,
                                       CorruptionRule::kSubstituteAdjacentKey, CorruptionRule::kTransposeAdjacent,
                                       CorruptionRule::kDropFinalConsonant};
  std::size_t variants_per_value = 20;
  std::uint64_t seed = 0;

  bool enabled(CorruptionRule r) const;
};

// At most variants_per_value distinct strings, none equal to `value`. With
// strip_diacritics enabled the fully stripped form comes first (if it differs).
std::vector<std::string> generate_corruptions(std::string_view value, const CorruptionSpec& spec);

struct IndexPoint {
  std::string surface;
  FeatureVector vector;
  std::string canonical;
};

struct KnnIndex {
  std::vector<IndexPoint> points;
  std::size_t k = 17;
  double reject_radius = 3.0;
};

KnnIndex build_index(const EntityLexicon& lexicon, const CorruptionSpec& spec, std::size_t k = 17,
                     double reject_radius = 3.0);

// Lowercase, collapse whitespace, strip leading/trailing whitespace and punctuation.
std::string regex_normalize(std::string_view surface);

struct NormalizationResult {
  std::optional<std::string> value;  // nullopt: no match
  double mean_distance = 0.0;
  double nearest_distance = 0.0;
};

// Distances from `query` to every point, in point order. Computed in parallel.
std::vector<double> distances(const KnnIndex& index, const FeatureVector& query);

namespace reference {
std::vector<double> distances(const KnnIndex& index, const FeatureVector& query);
}  // namespace reference

// Majority label of the k nearest points (k clamped to the index size);
// ties by smaller mean distance, then label. Exact (distance 0) hits vote
// alone. No match when the nearest point is beyond reject_radius.
NormalizationResult normalize_entity(const KnnIndex& index, std::string_view surface);
NormalizationResult normalize_entity(const KnnIndex& index, std::string_view surface, std::size_t k);

struct LabeledSurface {
  std::string surface;
  std::string canonical;
};

// Held-out corruptions of every lexicon value.
std::vector<LabeledSurface> make_eval_set(const EntityLexicon& lexicon, const CorruptionSpec& spec);

struct KRow {
  std::size_t k;
  double accuracy;  // percent

  bool operator==(const KRow&) const = default;
};

struct KSweepResult {
  std::vector<KRow> rows;
  std::size_t best_k = 0;  // first k with the highest accuracy
};

inline const std::vector<std::size_t> kDefaultKs = {11, 13, 15, 17, 19};

// Throws when any k exceeds the index size.
KSweepResult k_sweep(const KnnIndex& index, std::span<const LabeledSurface> eval,
                     const std::vector<std::size_t>& ks = kDefaultKs);

}  // namespace cbot::knn
