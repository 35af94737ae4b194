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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbot/corpus.hpp"
#include "cbot/crf.hpp"
#include "cbot/knn.hpp"
#include "cbot/policy.hpp"
#include "cbot/svm.hpp"
#include "cbot/text.hpp"
#include "cbot/tracker.hpp"

namespace cbot {

// Answers for custom actions, keyed by (action, regex-normalized value).
struct KnowledgeBase {
  std::map<std::pair<std::string, std::string>, std::string> entries;

  // "action<TAB>key<TAB>answer" per line; blank and '#' lines skipped.
  static KnowledgeBase parse(std::string_view text);
  std::optional<std::string> lookup(std::string_view action, std::string_view key) const;
  bool operator==(const KnowledgeBase&) const = default;
};

struct ParsedEntity {
  std::string entity;
  std::string raw_value;
  std::string value;  // kNN-normalized, or the regex-normalized raw value on reject
  bool matched = false;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const ParsedEntity&) const = default;
};

struct ParseResult {
  std::string text;
  std::vector<std::pair<std::string, double>> intent_ranking;
  std::vector<ParsedEntity> entities;

  const std::string& intent() const { return intent_ranking.front().first; }
  double confidence() const { return intent_ranking.front().second; }
};

struct ResponseDebug {
  std::vector<std::pair<std::string, double>> intent_ranking;
  std::vector<ParsedEntity> entities;
  std::vector<std::string> actions;  // action chain of the cycle, listen included
  bool low_confidence = false;
};

struct BotResponse {
  std::string text;
  std::string action;
  ResponseDebug debug;
};

struct EngineSettings {
  double confidence_threshold = 0.3;
  std::size_t max_actions = 10;
  // custom action -> slot holding its knowledge-base key
  std::map<std::string, std::string> action_slots;
  std::string missing_answer_text = "Xin lỗi, mình chưa có thông tin về nội dung này.";
  std::string low_confidence_text = "Xin lỗi, mình chưa hiểu ý bạn. Bạn có thể nói rõ hơn không?";

  bool operator==(const EngineSettings&) const = default;
};

struct Engine {
  DomainSpec domain;
  EmbeddingTable embeddings;
  svm::SvmModel svm;
  crf::CrfModel crf;
  knn::KnnIndex knn;
  policy::PolicyModel policy;
  KnowledgeBase knowledge;
  EngineSettings settings;

  // Throws ModelError when the models disagree with the domain or a custom
  // action has no slot mapping.
  void validate() const;

  ParseResult parse(std::string_view text) const;

  // One user message: NLU, slot updates, then predicted actions until
  // action_listen or the safety bound. Returns the utterances of the cycle.
  std::vector<BotResponse> handle_message(ConversationTracker& tracker, std::string_view text,
                                          std::uint64_t seed) const;

  std::optional<BotResponse> execute_action(ConversationTracker& tracker, std::string_view action,
                                            std::uint64_t seed) const;

  std::string next_action(const ConversationTracker& tracker) const;
};

// Uniform seeded choice among the variants.
std::string render_template(const ResponseTemplate& tpl, std::uint64_t seed);

struct ActionCheck {
  std::string expected;
  std::string predicted;
};

struct ReplayResult {
  std::string story;
  std::vector<ActionCheck> actions;
  bool passed = true;

  std::size_t mismatches() const;
};

// Teacher-forced replay: user turns come from the story, each authored bot
// action is compared with the policy's prediction and then executed.
ReplayResult replay_story(const Engine& engine, const Story& story);
std::vector<ReplayResult> replay_stories(const Engine& engine, const std::vector<Story>& stories);

// Copy of `utt` with diacritics folded away; span offsets follow the new text.
AnnotatedUtterance strip_diacritics(const AnnotatedUtterance& utt);

}  // namespace cbot
