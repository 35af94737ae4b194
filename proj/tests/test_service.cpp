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

#include <set>

#include "cbot/error.hpp"
#include "cbot/policy.hpp"
#include "cbot/util.hpp"
#include "http_fixture.hpp"
#include "schema.hpp"
#include "support.hpp"

using namespace cbot;
using nlohmann::json;

namespace {

testing::LiveServer& server() {
  static testing::LiveServer s(testing::bundled().trained.engine, testing::bundled().config.seed);
  return s;
}

const std::set<std::string> kGreetings{"Hey! Chào bạn <3 !", "Chào bạn !", "Xin chào !"};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

void check_schema(const json& v, const json& schema) {
  const auto errors = testing::validate_schema(v, schema);
  for (const auto& e : errors) FAIL_CHECK(e);
  CHECK(errors.empty());
}

}  // namespace

TEST_CASE("the schema checker rejects extra and missing keys") {
  CHECK_FALSE(testing::validate_schema(json::parse(R"({"status":"ok"})"), testing::health_schema()).empty());
  CHECK_FALSE(testing::validate_schema(json::parse(R"({"status":"ok","model_fingerprint":"a","x":1})"),
                                       testing::health_schema())
                  .empty());
  CHECK(testing::validate_schema(json::parse(R"({"status":"ok","model_fingerprint":"a"})"), testing::health_schema())
            .empty());
  CHECK_FALSE(testing::validate_schema(json::parse(R"([{"recipient_id":"u","text":3}])"), testing::chat_reply_schema())
                  .empty());
}

TEST_CASE("chat greets with a greeting variant") {
  auto c = server().client();
  const auto r = c.Post("/webhooks/chat", R"({"sender":"u1","message":"xin chào"})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->get_header_value("Content-Type").find("application/json") == 0);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  const auto body = body_of(r);
  check_schema(body, testing::chat_reply_schema());
  REQUIRE(body.size() >= 1);
  CHECK(body[0]["recipient_id"] == "u1");
  CHECK(kGreetings.count(body[0]["text"].get<std::string>()));
}

TEST_CASE("health reports the model fingerprint") {
  auto c = server().client();
  const auto r = c.Get("/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto body = body_of(r);
  check_schema(body, testing::health_schema());
  CHECK(body["model_fingerprint"] == hex64(testing::bundled().trained.engine.domain.fingerprint()));
}

TEST_CASE("parse returns ranking and normalized entities") {
  auto c = server().client();
  const auto r = c.Get("/model/parse", httplib::Params{{"q", "học phần là cái gì"}}, httplib::Headers{});
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto body = body_of(r);
  check_schema(body, testing::parse_schema());
  bool has_intent = false;
  for (const auto& row : body["intent_ranking"]) has_intent |= row["name"] == "dinhNghia";
  CHECK(has_intent);
  CHECK(body["intent_ranking"][0]["name"] == "dinhNghia");
  bool has_value = false;
  for (const auto& e : body["entities"]) has_value |= e["value"] == "học phần";
  CHECK(has_value);
}

TEST_CASE("malformed requests get 400 and the server keeps serving") {
  auto c = server().client();
  for (const char* bad : {"not json", "[]", R"({"message":"hi"})", R"({"sender":"","message":"hi"})",
                          R"({"sender":"u","message":5})", R"({"sender":7,"message":"x"})", ""}) {
    const auto r = c.Post("/webhooks/chat", bad, "application/json");
    REQUIRE(r);
    CHECK_MESSAGE(r->status == 400, bad);
    check_schema(body_of(r), testing::error_schema());
  }
  const auto missing_q = c.Get("/model/parse");
  REQUIRE(missing_q);
  CHECK(missing_q->status == 400);
  const auto unknown = c.Get("/nowhere");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  check_schema(body_of(unknown), testing::error_schema());
  const auto after = c.Get("/health");
  REQUIRE(after);
  CHECK(after->status == 200);
}

TEST_CASE("restart resets the conversation") {
  auto c = server().client();
  REQUIRE(c.Post("/webhooks/chat", R"({"sender":"r1","message":"xin chào"})", "application/json"));
  const auto r = c.Post("/conversations/r1/restart", "", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto body = body_of(r);
  check_schema(body, testing::restart_schema());
  CHECK(body["sender"] == "r1");
  const auto t = server().service().tracker("r1");
  const auto state = policy::featurize_tracker(t, testing::bundled().trained.engine.domain);
  CHECK(std::all_of(state.begin(), state.end(), [](auto b) { return b == 0; }));
  const auto twice = c.Post("/conversations/r1/restart", "", "application/json");
  REQUIRE(twice);
  CHECK(twice->status == 200);
  CHECK(server().service().tracker("r1").slots().empty());
}

TEST_CASE("CORS preflight") {
  auto c = server().client();
  const auto r = c.Options("/webhooks/chat");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(r->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("conversations are independent and seeded") {
  ChatService a(testing::bundled().trained.engine, 42), b(testing::bundled().trained.engine, 42);
  for (const char* msg : {"xin chào", "học phần là cái gì", "tạm biệt"}) {
    const std::string body = json{{"sender", "s"}, {"message", msg}}.dump();
    CHECK(a.chat(body).body == b.chat(body).body);
  }
  CHECK(a.message_seed("s", 0) != a.message_seed("t", 0));
  CHECK(a.message_seed("s", 0) != a.message_seed("s", 1));
  CHECK(a.tracker("s").user_message_count() == 3);
  CHECK(a.tracker("other").events().empty());
}

TEST_CASE("bind address parsing") {
  CHECK(parse_bind("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK(parse_bind(":0") == std::pair<std::string, int>{"0.0.0.0", 0});
  CHECK(parse_bind("5005").second == 5005);
  CHECK_THROWS_AS(parse_bind("host:abc"), Error);
  CHECK_THROWS_AS(parse_bind("host:70000"), Error);
}
