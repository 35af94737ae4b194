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

#include <cmath>
#include <numeric>

#include "cbot/error.hpp"
#include "cbot/policy.hpp"
#include "cbot/util.hpp"
#include "support.hpp"

using namespace cbot;
using namespace cbot::policy;

namespace {

std::size_t bits(const StateVector& s) { return static_cast<std::size_t>(std::accumulate(s.begin(), s.end(), 0)); }

const DomainSpec& domain() { return testing::bundled().data.domain; }

const Story& ann_info_story() {
  for (const auto& s : testing::bundled().data.stories)
    if (s.name == "story_AnnInfo_dn") return s;
  throw Error("story missing");
}

std::vector<PolicyExample> random_batch(Rng& rng, std::size_t n, std::size_t input, std::size_t outputs,
                                        std::size_t history) {
  std::vector<PolicyExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    PolicyExample ex;
    for (std::size_t t = 0; t < history; ++t) {
      StateVector s(input);
      for (auto& b : s) b = rng.uniform() < 0.4;
      ex.window.push_back(s);
    }
    ex.target = rng.index(outputs);
    batch.push_back(ex);
  }
  return batch;
}

}  // namespace

TEST_CASE("tracker state follows its event log") {
  ConversationTracker t("u");
  t.apply(UserMessage{"học phần là gì", "dinhNghia", 0.9, {{0, 9, "học phần", "dn"}}});
  t.apply(SlotSet{"dn", "học phần"});
  t.execute("action_dn");
  CHECK(t.slot("dn") == "học phần");
  CHECK(t.last_action() == "action_dn");
  CHECK(t.user_message_count() == 1);
  t.execute("reset_slots");
  CHECK(t.slots().empty());
  const auto again = ConversationTracker::replay("u", t.events());
  CHECK(again.events() == t.events());
  CHECK(again.slots() == t.slots());
  CHECK(again.last_action() == t.last_action());
  t.execute("action_restart");
  CHECK(t.slots().empty());
  CHECK_FALSE(t.latest_message().has_value());
  CHECK_FALSE(t.last_action().has_value());
}

TEST_CASE("state bits count intent, entities, slots and previous action") {
  const auto& d = domain();
  CHECK(state_size(d) == d.intents.size() + d.entity_names.size() + d.slot_names.size() + d.actions.size());
  ConversationTracker t;
  CHECK(bits(featurize_tracker(t, d)) == 0);
  apply_user_turn(t, UserTurn{"xinChao", {}});
  CHECK(bits(featurize_tracker(t, d)) == 1);
  t.execute("utter_xinChao");
  CHECK(bits(featurize_tracker(t, d)) == 2);
  apply_user_turn(t, UserTurn{"dinhNghia", {{"dn", "học phần"}}});
  const auto s = featurize_tracker(t, d);
  CHECK(bits(s) == 4);
  CHECK(bits(s) <= 2 + d.entity_names.size() + d.slot_names.size());
  t.execute("action_restart");
  CHECK(bits(featurize_tracker(t, d)) == 0);
  CHECK(state_history(t, d).size() == 1);
}

TEST_CASE("featurizing an unknown intent is a model error") {
  ConversationTracker t;
  apply_user_turn(t, UserTurn{"ghost", {}});
  CHECK_THROWS_AS(featurize_tracker(t, domain()), ModelError);
}

TEST_CASE("stories yield one example per bot action plus listens") {
  const auto& story = ann_info_story();
  const auto examples = stories_to_sequences({story}, domain(), 5);
  std::vector<std::string> authored;
  std::size_t turns = 0;
  for (const auto& step : story.steps) {
    if (const auto* a = std::get_if<BotAction>(&step)) authored.push_back(a->name);
    else ++turns;
  }
  REQUIRE(examples.size() == authored.size() + turns);
  std::vector<std::string> targets;
  for (const auto& ex : examples) {
    CHECK(ex.window.size() == 5);
    const auto& name = domain().actions[ex.target];
    if (name != kActionListen) targets.push_back(name);
  }
  CHECK(targets == authored);
  CHECK(targets[0] == "utter_xinChao");
  CHECK(targets[1] == "utter_AnnaInfo");
}

TEST_CASE("a one-turn story pads a single real state") {
  const Story s{"tiny", {UserTurn{"xinChao", {}}, BotAction{"utter_xinChao"}}};
  const auto examples = stories_to_sequences({s}, domain(), 5);
  REQUIRE(examples.size() == 2);
  const auto& w = examples[0].window;
  REQUIRE(w.size() == 5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(bits(w[i]) == 0);
  CHECK(bits(w[4]) == 1);
}

TEST_CASE("no window exceeds max history") {
  for (std::size_t h : {1, 3, 5}) {
    for (const auto& ex : stories_to_sequences(testing::bundled().data.stories, domain(), h)) CHECK(ex.window.size() == h);
  }
  ConversationTracker t;
  for (int i = 0; i < 8; ++i) {
    apply_user_turn(t, UserTurn{"xinChao", {}});
    t.execute("utter_xinChao");
    t.execute("action_listen");
  }
  CHECK(state_history(t, domain()).size() > 5);
  CHECK(state_window(t, domain(), 5).size() == 5);
}

TEST_CASE("BPTT agrees with finite differences") {
  Rng rng(3);
  const auto model = PolicyModel::random(6, 4, 3, 3, 17);
  const auto batch = random_batch(rng, 2, 6, 3, 3);
  CHECK(policy_gradient_check(model, batch) < 1e-4);

  auto zero = model;
  std::fill(zero.params.begin(), zero.params.end(), 0.0);
  const double err = policy_gradient_check(zero, batch);
  CHECK(std::isfinite(err));
  CHECK(err < 1e-4);
}

TEST_CASE("duplicating the batch doubles the summed gradient") {
  Rng rng(8);
  const auto model = PolicyModel::random(5, 4, 3, 3, 2);
  const auto one = random_batch(rng, 1, 5, 3, 3);
  const std::vector<PolicyExample> two{one[0], one[0]};
  const auto g1 = loss_and_gradient(model, one);
  const auto g2 = loss_and_gradient(model, two);
  for (std::size_t i = 0; i < g1.gradient.size(); ++i) CHECK(g2.gradient[i] == 2 * g1.gradient[i]);
  CHECK(g2.loss == 2 * g1.loss);
}

TEST_CASE("predictions are pure distributions") {
  Rng rng(21);
  const auto model = PolicyModel::random(7, 4, 5, 4, 9);
  for (int i = 0; i < 50; ++i) {
    const auto ex = random_batch(rng, 1, 7, 5, 1 + rng.index(6))[0];
    const auto p = predict_action(model, ex.window);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(predict_action(model, ex.window) == p);
  }
}

TEST_CASE("a single story is memorized") {
  const auto& d = domain();
  const auto examples = stories_to_sequences({ann_info_story()}, d, 5);
  PolicyConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 5;
  const auto result = train_policy(examples, d, cfg);
  CHECK(accuracy(result.model, examples) == 100.0);
  REQUIRE_FALSE(result.trace.epochs.empty());
  CHECK(result.trace.epochs.front().loss < result.trace.initial_loss);
  CHECK(result.model.domain_fingerprint == d.fingerprint());
}

TEST_CASE("bundled stories are learned") {
  const auto& b = testing::bundled();
  const auto& trace = b.trained.report.policy;
  REQUIRE_FALSE(trace.epochs.empty());
  CHECK(trace.epochs.back().accuracy >= 95.0);
  CHECK(trace.epochs.front().loss < trace.initial_loss);
}

TEST_CASE("the definition turn predicts the lookup action") {
  const auto& engine = testing::bundled().trained.engine;
  ConversationTracker t;
  apply_user_turn(t, UserTurn{"xinChao", {}});
  t.execute("utter_xinChao");
  t.execute("action_listen");
  apply_user_turn(t, UserTurn{"Anna_info", {}});
  t.execute("utter_AnnaInfo");
  t.execute("utter_continue");
  t.execute("action_listen");
  apply_user_turn(t, UserTurn{"dinhNghia", {{"dn", "học phần"}}});
  CHECK(engine.next_action(t) == "action_dn");
}
