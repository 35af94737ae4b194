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

#include "doctest.h"

#include <algorithm>
#include <set>

#include "cbot/engine.hpp"
#include "cbot/error.hpp"
#include "cbot/policy.hpp"
#include "support.hpp"

using namespace cbot;

namespace {

const Engine& engine() { return testing::bundled().trained.engine; }

const std::set<std::string> kGreetings{"Hey! Chào bạn <3 !", "Chào bạn !", "Xin chào !"};

std::size_t index_of(const std::vector<std::string>& v, const std::string& x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

}  // namespace

TEST_CASE("a greeting gets one of the greeting variants") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ConversationTracker t("u");
    const auto replies = engine().handle_message(t, "xin chào", seed);
    REQUIRE(replies.size() == 1);
    CHECK(kGreetings.count(replies[0].text));
    CHECK(replies[0].action == "utter_xinChao");
    CHECK(replies[0].debug.actions.back() == "action_listen");
  }
}

TEST_CASE("a definition question is answered from the knowledge base") {
  const auto expected = engine().knowledge.lookup("action_dn", "học phần");
  REQUIRE(expected.has_value());
  ConversationTracker t("u");
  const auto replies = engine().handle_message(t, "học phần là cái gì", 1);
  REQUIRE_FALSE(replies.empty());
  const auto& debug = replies[0].debug;
  REQUIRE(debug.entities.size() == 1);
  CHECK(debug.entities[0].entity == "dn");
  CHECK(debug.entities[0].value == "học phần");
  const auto& chain = debug.actions;
  const auto a = index_of(chain, "action_dn"), r = index_of(chain, "reset_slots"), c = index_of(chain, "utter_continue");
  REQUIRE(c < chain.size());
  CHECK(a < r);
  CHECK(r < c);
  CHECK(replies[0].action == "action_dn");
  CHECK(replies[0].text == *expected);
  CHECK(t.slots().empty());

  bool slot_was_set = false;
  for (const auto& e : t.events())
    if (const auto* s = std::get_if<SlotSet>(&e); s && s->name == "dn" && s->value == "học phần") slot_was_set = true;
  CHECK(slot_was_set);
}

TEST_CASE("stripped diacritics reach the same answer") {
  ConversationTracker t1("a"), t2("b");
  const auto with = engine().handle_message(t1, "học phần là cái gì", 3);
  const auto without = engine().handle_message(t2, "hoc phan la cai gi", 3);
  REQUIRE_FALSE(with.empty());
  REQUIRE_FALSE(without.empty());
  REQUIRE(without[0].debug.entities.size() == 1);
  CHECK(without[0].debug.entities[0].raw_value == "hoc phan");
  CHECK(without[0].debug.entities[0].value == "học phần");
  CHECK(without[0].debug.entities[0].matched);
  CHECK(without[0].text == with[0].text);
}

TEST_CASE("parse ranks every intent") {
  const auto r = engine().parse("học phần là cái gì");
  CHECK(r.intent_ranking.size() == engine().domain.intents.size());
  CHECK(r.intent() == "dinhNghia");
  double sum = 0;
  for (const auto& [n, c] : r.intent_ranking) sum += c;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("control actions") {
  ConversationTracker t("u");
  t.apply(SlotSet{"dn", "học phần"});
  CHECK_FALSE(engine().execute_action(t, "reset_slots", 0).has_value());
  CHECK(t.slots().empty());

  engine().handle_message(t, "xin chào", 0);
  CHECK_FALSE(engine().execute_action(t, "action_restart", 0).has_value());
  const auto state = policy::featurize_tracker(t, engine().domain);
  CHECK(std::all_of(state.begin(), state.end(), [](auto b) { return b == 0; }));
}

TEST_CASE("a lookup without its slot falls back") {
  ConversationTracker t("u");
  t.apply(SlotSet{"nganh", "công nghệ thông tin"});
  const auto before = t.events().size();
  const auto reply = engine().execute_action(t, "action_dn", 0);
  REQUIRE(reply.has_value());
  CHECK(reply->text == engine().settings.missing_answer_text);
  REQUIRE(t.events().size() == before + 1);
  CHECK(std::get<ActionExecuted>(t.events().back()).name == "action_dn");
  CHECK(t.slot("nganh") == "công nghệ thông tin");
}

TEST_CASE("low confidence routes to the fallback text") {
  Engine strict = engine();
  strict.settings.confidence_threshold = 0.999;
  ConversationTracker t("u");
  const auto replies = strict.handle_message(t, "asdf qwer", 0);
  REQUIRE(replies.size() == 1);
  CHECK(replies[0].text == strict.settings.low_confidence_text);
  CHECK(replies[0].debug.low_confidence);
  CHECK(t.events().empty());
}

TEST_CASE("template rendering is uniform and seeded") {
  const ResponseTemplate one{"utter_a", {"only"}};
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(render_template(one, s) == "only");

  const ResponseTemplate three{"utter_b", {"x", "y", "z"}};
  std::map<std::string, int> counts;
  for (std::uint64_t s = 0; s < 3000; ++s) ++counts[render_template(three, s)];
  for (const auto& v : three.variants) {
    const double f = counts[v] / 3000.0;
    CHECK(f >= 0.28);
    CHECK(f <= 0.39);
  }
  CHECK(render_template(three, 12345) == render_template(three, 12345));
}

TEST_CASE("training stories replay perfectly") {
  const auto results = replay_stories(engine(), testing::bundled().data.stories);
  REQUIRE(results.size() == testing::bundled().data.stories.size());
  for (const auto& r : results) {
    CHECK_MESSAGE(r.passed, r.story);
    CHECK(r.mismatches() == 0);
  }
  CHECK(replay_stories(engine(), {}).empty());
}

TEST_CASE("a corrupted story fails with one mismatch") {
  Story s;
  for (const auto& story : testing::bundled().data.stories)
    if (story.name == "story_AnnInfo_dn") s = story;
  REQUIRE_FALSE(s.steps.empty());
  for (auto& step : s.steps)
    if (auto* a = std::get_if<BotAction>(&step); a && a->name == "utter_AnnaInfo") {
      a->name = "utter_bye";
      break;
    }
  const auto r = replay_story(engine(), s);
  CHECK_FALSE(r.passed);
  CHECK(r.mismatches() == 1);
}

TEST_CASE("knowledge base parsing") {
  const auto kb = KnowledgeBase::parse("# c\naction_dn\t Học Phần \tanswer\n\naction_x\tk\tv\n");
  CHECK(kb.lookup("action_dn", "học phần") == "answer");
  CHECK_FALSE(kb.lookup("action_dn", "khác").has_value());
  CHECK_THROWS(KnowledgeBase::parse("action_dn\tkey\tone\naction_dn\tKEY\ttwo\n"));
  CHECK_THROWS(KnowledgeBase::parse("only two\tfields\n"));
}

TEST_CASE("strip_diacritics moves span offsets") {
  const AnnotatedUtterance utt = parse_annotated("cho hỏi [học phần](dn) là gì");
  const auto s = strip_diacritics(utt);
  CHECK(s.text == "cho hoi hoc phan la gi");
  REQUIRE(s.spans.size() == 1);
  CHECK(s.spans[0].value == "hoc phan");
  CHECK(s.text.substr(s.spans[0].start, s.spans[0].end - s.spans[0].start) == "hoc phan");
}

TEST_CASE("validation catches inconsistent engines") {
  CHECK_NOTHROW(engine().validate());
  Engine missing_template = engine();
  missing_template.domain.templates.erase("utter_xinChao");
  CHECK_THROWS_AS(missing_template.validate(), ModelError);
  Engine unmapped = engine();
  unmapped.settings.action_slots.erase("action_dn");
  CHECK_THROWS_AS(unmapped.validate(), ModelError);
  Engine stale = engine();
  stale.policy.domain_fingerprint ^= 1;
  CHECK_THROWS_AS(stale.validate(), ModelError);
}
