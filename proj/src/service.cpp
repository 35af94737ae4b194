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

#include "cbot/service.hpp"

#include "cbot/error.hpp"
#include "cbot/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cbot {
namespace {

using nlohmann::json;

HttpReply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

ChatService::ChatService(Engine engine, std::uint64_t seed)
    : engine_(std::move(engine)), seed_(seed), fingerprint_(hex64(engine_.domain.fingerprint())) {
  engine_.validate();
}

std::uint64_t ChatService::message_seed(std::string_view sender, std::size_t index) const {
  return hash_combine(hash_combine(seed_, fnv1a(sender)), index);
}

ChatService::Conversation& ChatService::conversation(std::string_view sender) {
  std::lock_guard lock(map_mu_);
  auto it = conversations_.find(sender);
  if (it == conversations_.end()) {
    auto c = std::make_unique<Conversation>();
    c->tracker = ConversationTracker(std::string(sender));
    it = conversations_.emplace(std::string(sender), std::move(c)).first;
  }
  return *it->second;
}

ConversationTracker ChatService::tracker(std::string_view sender) {
  auto& c = conversation(sender);
  std::lock_guard lock(c.mu);
  return c.tracker;
}

HttpReply ChatService::chat(std::string_view body) {
  json req = json::parse(body, nullptr, false);
  if (req.is_discarded()) return error_reply(400, "request body is not valid JSON");
  if (!req.is_object()) return error_reply(400, "request body must be a JSON object");
  if (!req.contains("sender") || !req["sender"].is_string() || req["sender"].get<std::string>().empty())
    return error_reply(400, "\"sender\" must be a non-empty string");
  if (!req.contains("message") || !req["message"].is_string())
    return error_reply(400, "\"message\" must be a string");
  const auto sender = req["sender"].get<std::string>();
  const auto message = req["message"].get<std::string>();

  auto& c = conversation(sender);
  std::vector<BotResponse> responses;
  {
    std::lock_guard lock(c.mu);
    const auto seed = message_seed(sender, c.messages++);
    responses = engine_.handle_message(c.tracker, message, seed);
  }
  json out = json::array();
  for (const auto& r : responses) out.push_back({{"recipient_id", sender}, {"text", r.text}});
  return {200, out.dump()};
}

HttpReply ChatService::health() const {
  return {200, json{{"status", "ok"}, {"model_fingerprint", fingerprint_}}.dump()};
}

HttpReply ChatService::parse(std::string_view text) const {
  const auto p = engine_.parse(text);
  json ranking = json::array();
  for (const auto& [name, conf] : p.intent_ranking) ranking.push_back({{"name", name}, {"confidence", conf}});
  json entities = json::array();
  for (const auto& e : p.entities)
    entities.push_back(
        {{"entity", e.entity}, {"raw_value", e.raw_value}, {"value", e.value}, {"start", e.start}, {"end", e.end}});
  return {200, json{{"intent_ranking", ranking}, {"entities", entities}}.dump()};
}

HttpReply ChatService::restart(std::string_view sender) {
  if (sender.empty()) return error_reply(400, "sender must not be empty");
  auto& c = conversation(sender);
  std::lock_guard lock(c.mu);
  c.tracker.execute(kActionRestart);
  return {200, json{{"sender", std::string(sender)}, {"status", "restarted"}}.dump()};
}

void install_routes(httplib::Server& server, ChatService& service) {
  constexpr const char* kJson = "application/json; charset=utf-8";
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, kJson);
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Post("/webhooks/chat", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.chat(req.body));
  });
  server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  server.Get("/model/parse", [&service, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("q")) return send(res, error_reply(400, "missing query parameter q"));
    send(res, service.parse(req.get_param_value("q")));
  });
  server.Post(R"(/conversations/([^/]+)/restart)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.restart(req.matches[1].str()));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string msg = res.status == 404 ? "not found" : "request failed";
    res.set_content(json{{"error", msg}}.dump(), "application/json; charset=utf-8");
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", msg}}.dump(), "application/json; charset=utf-8");
  });
}

std::pair<std::string, int> parse_bind(std::string_view bind) {
  const auto colon = bind.rfind(':');
  const std::string host = colon == std::string_view::npos ? "127.0.0.1" : std::string(bind.substr(0, colon));
  const std::string port = std::string(colon == std::string_view::npos ? bind : bind.substr(colon + 1));
  std::size_t used = 0;
  int p = -1;
  try {
    p = std::stoi(port, &used);
  } catch (const std::exception&) {
  }
  if (used != port.size() || p < 0 || p > 65535) throw Error("invalid bind address '" + std::string(bind) + "'");
  return {host.empty() ? "0.0.0.0" : host, p};
}

}  // namespace cbot
