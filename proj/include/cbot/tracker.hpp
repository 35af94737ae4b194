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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cbot/corpus.hpp"

namespace cbot {

struct UserMessage {
  std::string text;
  std::string intent;
  double confidence = 1.0;
  std::vector<EntitySpan> entities;  // values already normalized

  bool operator==(const UserMessage&) const = default;
};

struct ActionExecuted {
  std::string name;

  bool operator==(const ActionExecuted&) const = default;
};

// nullopt clears the slot.
struct SlotSet {
  std::string name;
  std::optional<std::string> value;

  bool operator==(const SlotSet&) const = default;
};

struct Restarted {
  bool operator==(const Restarted&) const = default;
};

using Event = std::variant<UserMessage, ActionExecuted, SlotSet, Restarted>;

// Per-conversation state. Every field is a function of the event log.
class ConversationTracker {
 public:
  explicit ConversationTracker(std::string sender_id = "default") : sender_id_(std::move(sender_id)) {}

  static ConversationTracker replay(std::string sender_id, const std::vector<Event>& events);

  void apply(Event event);

  // Appends ActionExecuted and the built-in effects of control actions:
  // reset_slots clears every slot, action_restart appends Restarted.
  void execute(std::string_view action);

  const std::string& sender_id() const { return sender_id_; }
  const std::vector<Event>& events() const { return events_; }
  const std::map<std::string, std::string>& slots() const { return slots_; }
  std::optional<std::string> slot(std::string_view name) const;
  const std::optional<std::string>& last_action() const { return last_action_; }
  const std::optional<UserMessage>& latest_message() const { return latest_message_; }
  std::size_t user_message_count() const { return user_messages_; }

 private:
  std::string sender_id_;
  std::vector<Event> events_;
  std::map<std::string, std::string> slots_;
  std::optional<std::string> last_action_;
  std::optional<UserMessage> latest_message_;
  std::size_t user_messages_ = 0;
};

}  // namespace cbot
