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

#include "cbot/tracker.hpp"

namespace cbot {

ConversationTracker ConversationTracker::replay(std::string sender_id, const std::vector<Event>& events) {
  ConversationTracker t(std::move(sender_id));
  for (const auto& e : events) t.apply(e);
  return t;
}

void ConversationTracker::apply(Event event) {
  std::visit(
      [this](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, UserMessage>) {
          latest_message_ = e;
          ++user_messages_;
        } else if constexpr (std::is_same_v<T, ActionExecuted>) {
          last_action_ = e.name;
        } else if constexpr (std::is_same_v<T, SlotSet>) {
          if (e.value)
            slots_[e.name] = *e.value;
          else
            slots_.erase(e.name);
        } else {
          slots_.clear();
          last_action_.reset();
          latest_message_.reset();
        }
      },
      event);
  events_.push_back(std::move(event));
}

void ConversationTracker::execute(std::string_view action) {
  apply(ActionExecuted{std::string(action)});
  if (action == kResetSlots) {
    std::vector<std::string> names;
    for (const auto& [name, value] : slots_) names.push_back(name);
    for (auto& n : names) apply(SlotSet{std::move(n), std::nullopt});
  } else if (action == kActionRestart) {
    apply(Restarted{});
  }
}

std::optional<std::string> ConversationTracker::slot(std::string_view name) const {
  auto it = slots_.find(std::string(name));
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

}  // namespace cbot
