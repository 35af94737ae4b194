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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "cbot/engine.hpp"

namespace httplib {
class Server;
}

namespace cbot {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Conversation state behind the HTTP API. Models are shared read-only;
// each sender's tracker is guarded by its own mutex.
class ChatService {
 public:
  ChatService(Engine engine, std::uint64_t seed);

  // POST /webhooks/chat with {"sender": string, "message": string}.
  HttpReply chat(std::string_view body);
  // GET /health
  HttpReply health() const;
  // GET /model/parse?q=
  HttpReply parse(std::string_view text) const;
  // POST /conversations/<sender>/restart
  HttpReply restart(std::string_view sender);

  // Copy of a sender's tracker (a fresh one for unknown senders).
  ConversationTracker tracker(std::string_view sender);
  const Engine& engine() const { return engine_; }
  // hash(global seed, sender, message index)
  std::uint64_t message_seed(std::string_view sender, std::size_t index) const;

 private:
  struct Conversation {
    std::mutex mu;
    ConversationTracker tracker;
    std::size_t messages = 0;
  };
  Conversation& conversation(std::string_view sender);

  Engine engine_;
  std::uint64_t seed_;
  std::string fingerprint_;
  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<Conversation>, std::less<>> conversations_;
};

// Routes, CORS headers, JSON 404/400/500 bodies.
void install_routes(httplib::Server& server, ChatService& service);

// "host:port" (host may be omitted). Throws Error on malformed input.
std::pair<std::string, int> parse_bind(std::string_view bind);

}  // namespace cbot
