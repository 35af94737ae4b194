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

#include "cbot/engine.hpp"

#include <algorithm>

#include "cbot/error.hpp"
#include "cbot/utf8.hpp"
#include "cbot/util.hpp"

namespace cbot {

KnowledgeBase KnowledgeBase::parse(std::string_view text) {
  KnowledgeBase kb;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw ParseError("expected action<TAB>key<TAB>answer", line_no);
    std::string action(line.substr(0, t1));
    std::string key = knn::regex_normalize(line.substr(t1 + 1, t2 - t1 - 1));
    std::string answer(line.substr(t2 + 1));
    if (action.empty() || key.empty() || answer.empty()) throw ParseError("empty knowledge-base field", line_no);
    if (!kb.entries.emplace(std::make_pair(action, key), answer).second)
      throw ParseError("duplicate knowledge-base key (" + action + ", " + key + ")", line_no);
  }
  return kb;
}

std::optional<std::string> KnowledgeBase::lookup(std::string_view action, std::string_view key) const {
  auto it = entries.find({std::string(action), std::string(key)});
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

std::string render_template(const ResponseTemplate& tpl, std::uint64_t seed) {
  if (tpl.variants.empty()) throw Error("template " + tpl.action_name + " has no variants");
  Rng rng(seed);
  return tpl.variants[static_cast<std::size_t>(rng.index(tpl.variants.size()))];
}

void Engine::validate() const {
  const auto fp = domain.fingerprint();
  if (policy.domain_fingerprint != fp)
    throw ModelError("policy was trained for domain " + hex64(policy.domain_fingerprint) + ", engine domain is " +
                     hex64(fp));
  if (policy.input_size != policy::state_size(domain) || policy.outputs != domain.actions.size())
    throw ModelError("policy shape does not match the domain");
  if (svm.classes != domain.intents) throw ModelError("intent classifier classes do not match the domain intents");
  if (svm.dimension != embeddings.dimension())
    throw ModelError("intent classifier dimension does not match the embeddings");
  for (const auto& label : crf.labels()) {
    const auto tag = BilouTag::parse(label);
    if (tag.role != BilouRole::kO && domain.entity_index(tag.entity) < 0)
      throw ModelError("entity extractor label " + label + " is not in the domain");
  }
  for (const auto& a : domain.actions) {
    if (a == kActionListen || a == kActionRestart || a == kResetSlots) continue;
    if (a.rfind("utter_", 0) == 0) {
      if (!domain.templates.count(a)) throw ModelError("no template for " + a);
      continue;
    }
    auto it = settings.action_slots.find(a);
    if (it == settings.action_slots.end()) throw ModelError("custom action " + a + " has no slot mapping");
    if (domain.slot_index(it->second) < 0) throw ModelError("slot " + it->second + " of " + a + " is not in the domain");
  }
}

ParseResult Engine::parse(std::string_view text) const {
  ParseResult r;
  r.text = std::string(text);
  const auto tokens = tokenize(text);
  r.intent_ranking = svm::predict_intent(svm, sentence_vector(tokens, embeddings)).ranking;
  if (tokens.empty()) return r;
  for (const auto& span : crf::extract_entities(crf, text, tokens)) {
    ParsedEntity e;
    e.entity = span.entity_name;
    e.raw_value = span.value;
    e.start = span.start;
    e.end = span.end;
    const auto norm = knn::normalize_entity(knn, span.value);
    if (norm.value) {
      e.value = *norm.value;
      e.matched = true;
    } else {
      e.value = knn::regex_normalize(span.value);
    }
    if (!e.value.empty()) r.entities.push_back(std::move(e));
  }
  return r;
}

std::string Engine::next_action(const ConversationTracker& tracker) const {
  const auto history = policy::state_history(tracker, domain);
  const auto probs = policy::predict_action(policy, history);
  const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  return domain.actions[best];
}

std::optional<BotResponse> Engine::execute_action(ConversationTracker& tracker, std::string_view action,
                                                  std::uint64_t seed) const {
  if (!domain.has_action(action)) throw Error("unknown action '" + std::string(action) + "'");
  const std::string name(action);
  if (name == kActionListen || name == kActionRestart || name == kResetSlots) {
    tracker.execute(name);
    return std::nullopt;
  }
  BotResponse r;
  r.action = name;
  if (auto it = domain.templates.find(name); it != domain.templates.end()) {
    r.text = render_template(it->second, seed);
  } else {
    auto slot_it = settings.action_slots.find(name);
    if (slot_it == settings.action_slots.end()) throw ModelError("custom action " + name + " has no slot mapping");
    std::optional<std::string> answer;
    if (auto key = tracker.slot(slot_it->second)) answer = knowledge.lookup(name, *key);
    r.text = answer ? *answer : settings.missing_answer_text;
  }
  tracker.execute(name);
  return r;
}

std::vector<BotResponse> Engine::handle_message(ConversationTracker& tracker, std::string_view text,
                                                std::uint64_t seed) const {
  const ParseResult parsed = parse(text);
  ResponseDebug debug;
  debug.intent_ranking = parsed.intent_ranking;
  debug.entities = parsed.entities;

  std::vector<BotResponse> out;
  if (parsed.confidence() < settings.confidence_threshold) {
    debug.low_confidence = true;
    out.push_back({settings.low_confidence_text, "", debug});
    return out;
  }

  UserMessage msg;
  msg.text = std::string(text);
  msg.intent = parsed.intent();
  msg.confidence = parsed.confidence();
  for (const auto& e : parsed.entities) msg.entities.push_back({e.start, e.end, e.value, e.entity});
  tracker.apply(msg);
  for (const auto& e : parsed.entities) tracker.apply(SlotSet{e.entity, e.value});

  for (std::size_t step = 0; step < settings.max_actions; ++step) {
    const std::string action = next_action(tracker);
    debug.actions.push_back(action);
    if (auto r = execute_action(tracker, action, hash_combine(seed, step))) out.push_back(std::move(*r));
    if (action == kActionListen) break;
  }
  for (auto& r : out) r.debug = debug;
  return out;
}

std::size_t ReplayResult::mismatches() const {
  return static_cast<std::size_t>(
      std::count_if(actions.begin(), actions.end(), [](const ActionCheck& c) { return c.expected != c.predicted; }));
}

ReplayResult replay_story(const Engine& engine, const Story& story) {
  ReplayResult r;
  r.story = story.name;
  ConversationTracker tracker(story.name);
  bool in_turn = false;
  for (const auto& step : story.steps) {
    if (const auto* turn = std::get_if<UserTurn>(&step)) {
      if (engine.domain.intent_index(turn->intent) < 0)
        throw ModelError("story " + story.name + " uses unknown intent '" + turn->intent + "'");
      if (in_turn) tracker.execute(kActionListen);
      policy::apply_user_turn(tracker, *turn);
      in_turn = true;
      continue;
    }
    const auto& expected = std::get<BotAction>(step).name;
    if (!engine.domain.has_action(expected))
      throw ModelError("story " + story.name + " uses unknown action '" + expected + "'");
    r.actions.push_back({expected, engine.next_action(tracker)});
    tracker.execute(expected);
  }
  r.passed = r.mismatches() == 0;
  return r;
}

std::vector<ReplayResult> replay_stories(const Engine& engine, const std::vector<Story>& stories) {
  std::vector<ReplayResult> out;
  out.reserve(stories.size());
  for (const auto& s : stories) out.push_back(replay_story(engine, s));
  return out;
}

AnnotatedUtterance strip_diacritics(const AnnotatedUtterance& utt) {
  AnnotatedUtterance out;
  std::size_t pos = 0;
  for (const auto& span : utt.spans) {
    out.text += utf8::fold(std::string_view(utt.text).substr(pos, span.start - pos));
    EntitySpan s = span;
    s.value = utf8::fold(span.value);
    s.start = out.text.size();
    out.text += s.value;
    s.end = out.text.size();
    out.spans.push_back(std::move(s));
    pos = span.end;
  }
  out.text += utf8::fold(std::string_view(utt.text).substr(pos));
  return out;
}

}  // namespace cbot
