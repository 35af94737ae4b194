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

#include "cbot/corpus.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

#include "cbot/error.hpp"
#include "cbot/util.hpp"
#include "json.hpp"

namespace cbot {
namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

struct Line {
  std::size_t number;
  std::string_view text;  // trimmed
  std::size_t indent;
};

// Non-blank, non-comment lines. A comment is '#' not followed by '#'.
std::vector<Line> content_lines(std::string_view source) {
  std::vector<Line> out;
  std::size_t number = 0, pos = 0;
  while (pos <= source.size()) {
    std::size_t nl = source.find('\n', pos);
    if (nl == std::string_view::npos) nl = source.size();
    std::string_view raw = source.substr(pos, nl - pos);
    ++number;
    pos = nl + 1;
    std::string_view t = trim(raw);
    if (t.empty()) continue;
    if (t[0] == '#' && (t.size() == 1 || t[1] != '#')) continue;
    std::size_t indent = 0;
    while (indent < raw.size() && (raw[indent] == ' ' || raw[indent] == '\t')) ++indent;
    out.push_back({number, t, indent});
    if (nl == source.size()) break;
  }
  return out;
}


int index_of(const std::vector<std::string>& sorted, std::string_view name) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), name,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == sorted.end() || *it != name) return -1;
  return static_cast<int>(it - sorted.begin());
}

// Story payload: {"dn": "x"} or ("dn": "x"); values scalar or 1-element list.
std::map<std::string, std::string> parse_payload(std::string_view payload, std::size_t line) {
  payload = trim(payload);
  if (payload.size() < 2) throw ParseError("malformed slot payload", line);
  std::string body(payload);
  if (body.front() == '(' && body.back() == ')') {
    body.front() = '{';
    body.back() = '}';
  }
  if (body.front() != '{' || body.back() != '}')
    throw ParseError("malformed slot payload '" + std::string(payload) + "'", line);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ParseError("malformed slot payload '" + std::string(payload) + "'", line);
  }
  if (!j.is_object()) throw ParseError("slot payload must be an object", line);
  std::map<std::string, std::string> out;
  for (auto& [key, value] : j.items()) {
    if (!is_identifier(key)) throw ParseError("bad entity name '" + key + "'", line);
    if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_array() && value.size() == 1 && value[0].is_string()) {
      out[key] = value[0].get<std::string>();
    } else {
      throw ParseError("slot '" + key + "' must be a string or one-element list", line);
    }
    if (out[key].empty()) throw ParseError("slot '" + key + "' has an empty value", line);
  }
  return out;
}

}  // namespace

AnnotatedUtterance parse_annotated(std::string_view pattern, std::size_t line) {
  AnnotatedUtterance utt;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const char c = pattern[i];
    if (c == ']') throw ParseError("unbalanced ']' in pattern", line);
    if (c != '[') {
      utt.text += c;
      ++i;
      continue;
    }
    const std::size_t close = pattern.find(']', i + 1);
    const std::size_t nested = pattern.find('[', i + 1);
    if (close == std::string_view::npos || (nested != std::string_view::npos && nested < close))
      throw ParseError("unbalanced '[' in pattern", line);
    std::string_view value = trim(pattern.substr(i + 1, close - i - 1));
    if (value.empty()) throw ParseError("empty entity value", line);
    std::size_t j = close + 1;
    while (j < pattern.size() && pattern[j] == ' ') ++j;
    if (j >= pattern.size() || pattern[j] != '(')
      throw ParseError("entity '" + std::string(value) + "' is missing its (name)", line);
    const std::size_t name_end = pattern.find(')', j + 1);
    if (name_end == std::string_view::npos) throw ParseError("unbalanced '(' in pattern", line);
    std::string_view name = trim(pattern.substr(j + 1, name_end - j - 1));
    if (!is_identifier(name)) throw ParseError("bad entity name '" + std::string(name) + "'", line);
    EntitySpan span;
    span.start = utt.text.size();
    utt.text += value;
    span.end = utt.text.size();
    span.value = std::string(value);
    span.entity_name = std::string(name);
    utt.spans.push_back(std::move(span));
    i = name_end + 1;
  }
  return utt;
}

std::string render_annotated(const AnnotatedUtterance& utt) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& span : utt.spans) {
    out.append(utt.text, pos, span.start - pos);
    out += '[' + span.value + "](" + span.entity_name + ')';
    pos = span.end;
  }
  out.append(utt.text, pos, std::string::npos);
  return out;
}

std::vector<IntentDef> parse_nlu(std::string_view source) {
  std::vector<IntentDef> intents;
  std::set<std::string> names;
  std::set<std::string> texts;
  std::size_t header_line = 0;

  auto close_intent = [&]() {
    if (!intents.empty() && intents.back().patterns.empty())
      throw ParseError("intent '" + intents.back().name + "' has no patterns", header_line);
  };

  for (const Line& line : content_lines(source)) {
    std::string_view t = line.text;
    if (starts_with(t, "##")) {
      close_intent();
      std::string_view h = trim(t.substr(2));
      if (!starts_with(h, "intent:")) throw ParseError("malformed header '" + std::string(t) + "'", line.number);
      std::string_view name = trim(h.substr(7));
      if (!is_identifier(name)) throw ParseError("malformed intent name '" + std::string(name) + "'", line.number);
      if (!names.insert(std::string(name)).second)
        throw ParseError("duplicate intent '" + std::string(name) + "'", line.number);
      intents.push_back({std::string(name), {}});
      texts.clear();
      header_line = line.number;
    } else if (t[0] == '-') {
      if (intents.empty()) throw ParseError("pattern outside any intent block", line.number);
      std::string_view body = trim(t.substr(1));
      if (body.empty()) throw ParseError("empty pattern", line.number);
      AnnotatedUtterance utt = parse_annotated(body, line.number);
      if (!texts.insert(utt.text).second)
        throw ParseError("duplicate pattern '" + utt.text + "' in intent '" + intents.back().name + "'",
                         line.number);
      intents.back().patterns.push_back(std::move(utt));
    } else {
      throw ParseError("unexpected line '" + std::string(t) + "'", line.number);
    }
  }
  close_intent();
  return intents;
}

std::string render_nlu(const std::vector<IntentDef>& intents) {
  std::ostringstream out;
  for (const auto& intent : intents) {
    out << "## intent:" << intent.name << '\n';
    for (const auto& p : intent.patterns) out << "- " << render_annotated(p) << '\n';
    out << '\n';
  }
  return out.str();
}

std::vector<ResponseTemplate> parse_templates(std::string_view source) {
  std::vector<ResponseTemplate> out;
  std::set<std::string> seen;
  bool rooted = false;
  std::size_t key_line = 0;

  auto close_key = [&]() {
    if (!out.empty() && out.back().variants.empty())
      throw ParseError("template '" + out.back().action_name + "' has no variants", key_line);
  };

  for (const Line& line : content_lines(source)) {
    std::string_view t = line.text;
    if (!rooted) {
      if (t != "templates:" || line.indent != 0) throw ParseError("expected 'templates:' root", line.number);
      rooted = true;
      continue;
    }
    if (line.indent == 0) throw ParseError("unexpected top-level key '" + std::string(t) + "'", line.number);
    if (t[0] == '-') {
      if (out.empty()) throw ParseError("variant before any template key", line.number);
      std::string_view item = trim(t.substr(1));
      if (!starts_with(item, "text:")) throw ParseError("expected '- text: <variant>'", line.number);
      std::string_view text = trim(item.substr(5));
      if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') && text.back() == text.front())
        text = text.substr(1, text.size() - 2);
      if (text.empty())
        throw ParseError("empty variant in template '" + out.back().action_name + "'", line.number);
      out.back().variants.emplace_back(text);
    } else if (t.back() == ':') {
      close_key();
      std::string_view key = trim(t.substr(0, t.size() - 1));
      if (!is_identifier(key)) throw ParseError("malformed action name '" + std::string(key) + "'", line.number);
      if (!starts_with(key, "utter_"))
        throw ParseError("template action '" + std::string(key) + "' must start with utter_", line.number);
      if (!seen.insert(std::string(key)).second)
        throw ParseError("duplicate template '" + std::string(key) + "'", line.number);
      out.push_back({std::string(key), {}});
      key_line = line.number;
    } else {
      throw ParseError("unexpected line '" + std::string(t) + "'", line.number);
    }
  }
  close_key();
  return out;
}

std::vector<Story> parse_stories(std::string_view source) {
  std::vector<Story> stories;
  std::size_t header_line = 0;
  bool awaiting_action = false;
  std::optional<std::size_t> last_turn;

  auto close_story = [&]() {
    if (stories.empty()) return;
    if (stories.back().steps.empty())
      throw ParseError("story '" + stories.back().name + "' is empty", header_line);
    if (awaiting_action)
      throw ParseError("story '" + stories.back().name + "' ends with a user turn and no bot action",
                       header_line);
  };

  for (const Line& line : content_lines(source)) {
    std::string_view t = line.text;
    if (starts_with(t, "##")) {
      close_story();
      std::string_view name = trim(t.substr(2));
      if (!is_identifier(name)) throw ParseError("malformed story name '" + std::string(name) + "'", line.number);
      stories.push_back({std::string(name), {}});
      header_line = line.number;
      awaiting_action = false;
      last_turn.reset();
      continue;
    }
    if (stories.empty()) throw ParseError("step outside any story", line.number);
    Story& story = stories.back();
    if (t[0] == '*') {
      if (awaiting_action) throw ParseError("user turn not followed by a bot action", line.number);
      std::string_view body = trim(t.substr(1));
      const std::size_t brace = body.find_first_of("{(");
      std::string_view intent = trim(body.substr(0, brace));
      if (!is_identifier(intent)) throw ParseError("malformed intent '" + std::string(intent) + "'", line.number);
      UserTurn turn{std::string(intent), {}};
      if (brace != std::string_view::npos) turn.entities = parse_payload(body.substr(brace), line.number);
      story.steps.emplace_back(std::move(turn));
      last_turn = story.steps.size() - 1;
      awaiting_action = true;
    } else if (t[0] == '-') {
      std::string_view body = trim(t.substr(1));
      if (starts_with(body, "slot") && body.size() > 4 && (body[4] == '{' || body[4] == '(')) {
        if (!last_turn) throw ParseError("slot line before any user turn", line.number);
        auto slots = parse_payload(body.substr(4), line.number);
        auto& turn = std::get<UserTurn>(story.steps[*last_turn]);
        for (auto& [k, v] : slots) turn.entities[k] = v;
        continue;
      }
      if (!last_turn) throw ParseError("bot action '" + std::string(body) + "' before any user turn", line.number);
      if (!is_identifier(body)) throw ParseError("malformed action '" + std::string(body) + "'", line.number);
      story.steps.emplace_back(BotAction{std::string(body)});
      awaiting_action = false;
    } else {
      throw ParseError("unexpected line '" + std::string(t) + "'", line.number);
    }
  }
  close_story();
  return stories;
}

std::string render_stories(const std::vector<Story>& stories) {
  std::ostringstream out;
  for (const auto& story : stories) {
    out << "## " << story.name << '\n';
    for (const auto& step : story.steps) {
      if (const auto* turn = std::get_if<UserTurn>(&step)) {
        out << "* " << turn->intent;
        if (!turn->entities.empty()) out << nlohmann::json(turn->entities).dump();
        out << '\n';
      } else {
        out << "  - " << std::get<BotAction>(step).name << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

int DomainSpec::intent_index(std::string_view name) const { return index_of(intents, name); }
int DomainSpec::entity_index(std::string_view name) const { return index_of(entity_names, name); }
int DomainSpec::slot_index(std::string_view name) const { return index_of(slot_names, name); }
int DomainSpec::action_index(std::string_view name) const { return index_of(actions, name); }

std::uint64_t DomainSpec::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  auto add = [&h](char tag, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      h = fnv1a(std::string_view(&tag, 1), h);
      h = fnv1a(n, h);
      h = fnv1a(std::string_view("\n", 1), h);
    }
  };
  add('I', intents);
  add('E', entity_names);
  add('S', slot_names);
  add('A', actions);
  return h;
}

DomainSpec build_domain(const std::vector<IntentDef>& intents,
                        const std::vector<ResponseTemplate>& templates,
                        const std::vector<Story>& stories,
                        const std::vector<std::string>& extra_actions) {
  std::set<std::string> intent_set, entity_set, action_set;
  std::vector<std::string> offenders;

  for (const auto& intent : intents) {
    intent_set.insert(intent.name);
    for (const auto& p : intent.patterns)
      for (const auto& s : p.spans) entity_set.insert(s.entity_name);
  }
  DomainSpec domain;
  for (const auto& t : templates) {
    action_set.insert(t.action_name);
    domain.templates[t.action_name] = t;
  }
  action_set.insert(std::string(kActionListen));
  action_set.insert(std::string(kActionRestart));
  action_set.insert(std::string(kResetSlots));
  for (const auto& a : extra_actions) {
    if (starts_with(a, "utter_") && !domain.templates.count(a))
      offenders.push_back("action '" + a + "' has no template");
    else
      action_set.insert(a);
  }

  for (const auto& story : stories) {
    for (const auto& step : story.steps) {
      if (const auto* turn = std::get_if<UserTurn>(&step)) {
        if (!intent_set.count(turn->intent))
          offenders.push_back("intent '" + turn->intent + "' (story " + story.name + ")");
        for (const auto& [entity, value] : turn->entities)
          if (!entity_set.count(entity))
            offenders.push_back("entity '" + entity + "' (story " + story.name + ")");
      } else {
        const auto& name = std::get<BotAction>(step).name;
        if (!action_set.count(name)) offenders.push_back("action '" + name + "' (story " + story.name + ")");
      }
    }
  }
  if (!offenders.empty()) {
    std::string msg = "domain validation failed: ";
    for (std::size_t i = 0; i < offenders.size(); ++i) msg += (i ? "; " : "") + offenders[i];
    throw ValidationError(msg);
  }

  domain.intents.assign(intent_set.begin(), intent_set.end());
  domain.entity_names.assign(entity_set.begin(), entity_set.end());
  domain.slot_names = domain.entity_names;
  domain.actions.assign(action_set.begin(), action_set.end());
  return domain;
}

}  // namespace cbot
