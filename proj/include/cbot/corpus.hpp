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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Training corpus: NLU intents, response templates and stories, plus the
// domain universe derived from them.
namespace cbot {

struct EntitySpan {
  std::size_t start = 0;  // byte offset
  std::size_t end = 0;    // byte offset, exclusive
  std::string value;
  std::string entity_name;

  bool operator==(const EntitySpan&) const = default;
};

struct AnnotatedUtterance {
  std::string text;  // markup removed
  std::vector<EntitySpan> spans;

  bool operator==(const AnnotatedUtterance&) const = default;
};

struct IntentDef {
  std::string name;
  std::vector<AnnotatedUtterance> patterns;

  bool operator==(const IntentDef&) const = default;
};

struct ResponseTemplate {
  std::string action_name;
  std::vector<std::string> variants;

  bool operator==(const ResponseTemplate&) const = default;
};

struct UserTurn {
  std::string intent;
  std::map<std::string, std::string> entities;

  bool operator==(const UserTurn&) const = default;
};

struct BotAction {
  std::string name;

  bool operator==(const BotAction&) const = default;
};

using StoryStep = std::variant<UserTurn, BotAction>;

struct Story {
  std::string name;
  std::vector<StoryStep> steps;

  bool operator==(const Story&) const = default;
};

inline constexpr std::string_view kActionListen = "action_listen";
inline constexpr std::string_view kActionRestart = "action_restart";
inline constexpr std::string_view kResetSlots = "reset_slots";

struct DomainSpec {
  std::vector<std::string> intents;
  std::vector<std::string> entity_names;
  std::vector<std::string> slot_names;
  std::vector<std::string> actions;
  std::map<std::string, ResponseTemplate> templates;

  // Position in the corresponding ordered set, or -1.
  int intent_index(std::string_view name) const;
  int entity_index(std::string_view name) const;
  int slot_index(std::string_view name) const;
  int action_index(std::string_view name) const;

  bool has_action(std::string_view name) const { return action_index(name) >= 0; }

  // Hash of the ordered sets; any change in index assignment changes it.
  std::uint64_t fingerprint() const;

  bool operator==(const DomainSpec&) const = default;
};

std::vector<IntentDef> parse_nlu(std::string_view source);
std::vector<ResponseTemplate> parse_templates(std::string_view source);
std::vector<Story> parse_stories(std::string_view source);

// Parses one pattern line body ("[học phần](dn) là gì") into text + spans.
AnnotatedUtterance parse_annotated(std::string_view pattern, std::size_t line = 0);

// Canonical markup, re-parseable by parse_nlu.
std::string render_annotated(const AnnotatedUtterance& utt);
std::string render_nlu(const std::vector<IntentDef>& intents);
std::string render_stories(const std::vector<Story>& stories);

// `extra_actions` are the custom (knowledge-base) actions. Throws
// ValidationError listing every undeclared intent, entity or action.
DomainSpec build_domain(const std::vector<IntentDef>& intents,
                        const std::vector<ResponseTemplate>& templates,
                        const std::vector<Story>& stories,
                        const std::vector<std::string>& extra_actions);

}  // namespace cbot
