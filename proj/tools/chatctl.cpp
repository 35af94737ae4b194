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

// chatctl: train, evaluate, chat with and serve the dialogue engine.

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cbot/bundle.hpp"
#include "cbot/config.hpp"
#include "cbot/error.hpp"
#include "cbot/eval.hpp"
#include "cbot/pipeline.hpp"
#include "cbot/service.hpp"
#include "cbot/util.hpp"
#include "httplib.h"

namespace {

using namespace cbot;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const auto start = Clock::now();
  const auto config = load_config(config_path);
  const auto data = load_training_data(config);
  std::printf("corpus: %zu intents, %zu stories, %zu lexicon values, %zu actions\n", data.intents.size(),
              data.stories.size(), data.lexicon.entries.size(), data.domain.actions.size());
  const auto trained = train_engine(data, config);
  const auto& r = trained.report;
  std::printf("intent SVM (%s): C grid", svm::kernel_name(config.kernel).c_str());
  for (const auto& row : r.grid.table) std::printf(" %g:%.2f%%", row.C, row.accuracy);
  std::printf(" -> C = %g, %zu support vectors\n", r.grid.best_C, r.support_vectors);
  std::printf("entity CRF: objective %.4f -> %.4f over %zu steps, %zu nonzero weights\n",
              r.crf_objective.front(), r.crf_objective.back(), r.crf_objective.size() - 1, r.crf_nonzero);
  std::printf("kNN index: %zu points\n", r.knn_points);
  const auto& p = r.policy;
  std::printf("policy LSTM: %zu examples, loss %.4f -> %.4f, accuracy %.2f%% after %zu epochs\n",
              r.policy_examples, p.initial_loss, p.epochs.empty() ? p.initial_loss : p.epochs.back().loss,
              p.epochs.empty() ? 0.0 : p.epochs.back().accuracy, p.epochs.size());
  save_bundle(trained.engine, config, data.checksums, out_dir);
  std::printf("bundle written to %s (fingerprint %s) in %.1f s\n", out_dir.c_str(),
              hex64(data.domain.fingerprint()).c_str(), seconds_since(start));
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& bundle, const std::string& out_dir,
                 const std::vector<std::string>& only) {
  const auto config = load_config(config_path);
  const auto data = load_training_data(config);
  std::set<std::string> sections;
  for (const auto& o : only) {
    std::stringstream ss(o);
    std::string part;
    while (std::getline(ss, part, ',')) sections.insert(part);
  }
  const bool need_engine = sections.empty() || sections.count("stories") || sections.count("ksweep");
  Engine engine;
  if (need_engine) {
    if (!bundle.empty()) {
      engine = load_bundle(bundle).engine;
      if (engine.domain.fingerprint() != data.domain.fingerprint())
        throw ModelError("bundle " + bundle + " was trained on a different domain");
    } else {
      engine = train_engine(data, config).engine;
    }
  }
  const auto report = run_evaluation(data, config, engine, sections);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  const auto text = emit_report(report, ReportFormat::kText);
  write_file(out / "report.txt", text);
  write_file(out / "report.json", emit_report(report, ReportFormat::kJson));
  write_file(out / "report.csv", emit_report(report, ReportFormat::kCsv));
  std::fputs(text.c_str(), stdout);
  return 0;
}

void print_debug(const ResponseDebug& d) {
  std::printf("  intent:");
  for (std::size_t i = 0; i < d.intent_ranking.size() && i < 3; ++i)
    std::printf(" %s=%.3f", d.intent_ranking[i].first.c_str(), d.intent_ranking[i].second);
  std::printf("%s\n", d.low_confidence ? " (below threshold)" : "");
  for (const auto& e : d.entities)
    std::printf("  entity %s: \"%s\" -> \"%s\"%s\n", e.entity.c_str(), e.raw_value.c_str(), e.value.c_str(),
                e.matched ? "" : " (no lexicon match)");
  std::printf("  actions:");
  for (const auto& a : d.actions) std::printf(" %s", a.c_str());
  std::printf("\n");
}

int cmd_shell(const std::string& bundle) {
  auto loaded = load_bundle(bundle);
  const Engine& engine = loaded.engine;
  ConversationTracker tracker("shell");
  bool debug = false;
  std::size_t index = 0;
  std::string line;
  std::printf("Type a message, /debug to toggle details, /restart to start over. EOF exits.\n");
  std::fflush(stdout);
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "/debug") {
      debug = !debug;
      std::printf("debug %s\n", debug ? "on" : "off");
    } else if (line == "/restart") {
      tracker.execute(kActionRestart);
      std::printf("conversation restarted\n");
    } else if (!line.empty()) {
      const auto seed = hash_combine(hash_combine(loaded.seed, fnv1a("shell")), index++);
      const auto responses = engine.handle_message(tracker, line, seed);
      for (const auto& r : responses) std::printf("bot: %s\n", r.text.c_str());
      if (debug && !responses.empty()) print_debug(responses.front().debug);
    }
    std::fflush(stdout);
  }
  return 0;
}

int cmd_serve(const std::string& bundle, const std::string& bind) {
  const auto [host, port] = parse_bind(bind);
  auto loaded = load_bundle(bundle);
  ChatService service(std::move(loaded.engine), loaded.seed);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  httplib::Server server;
  install_routes(server, service);
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    std::fprintf(stderr, "error: cannot bind %s:%d\n", host.c_str(), port);
    return 1;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::printf("listening on %s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  const bool ok = server.listen_after_bind();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  std::printf("server stopped\n");
  return ok ? 0 : 1;
}

int cmd_validate(const std::string& config_path) {
  const auto config = load_config(config_path);
  const auto data = load_training_data(config);
  std::size_t patterns = 0;
  for (const auto& i : data.intents) patterns += i.patterns.size();
  std::printf("ok: %zu intents, %zu patterns, %zu templates, %zu stories, %zu test stories\n", data.intents.size(),
              patterns, data.templates.size(), data.stories.size(), data.test_stories.size());
  std::printf("domain: %zu entities, %zu slots, %zu actions, fingerprint %s\n", data.domain.entity_names.size(),
              data.domain.slot_names.size(), data.domain.actions.size(), hex64(data.domain.fingerprint()).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-domain chatbot engine"};
  app.require_subcommand(1);

  std::string config, out, bundle, bind = "127.0.0.1:5005";
  std::vector<std::string> only;

  auto* train = app.add_subcommand("train", "Train every model and write a bundle");
  train->add_option("--config", config, "Pipeline config file")->required();
  train->add_option("--out", out, "Bundle directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate and write report files");
  evaluate->add_option("--config", config, "Pipeline config file")->required();
  evaluate->add_option("--bundle", bundle, "Use this bundle for story replay and the k-sweep");
  evaluate->add_option("--out", out, "Report directory")->required();
  evaluate->add_option("--only", only, "Sections: intents, kernels, confidences, entities, stories, ksweep");

  auto* shell = app.add_subcommand("shell", "Chat on the terminal");
  shell->add_option("--bundle", bundle, "Bundle directory")->required();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP chat API");
  serve->add_option("--bundle", bundle, "Bundle directory")->required();
  serve->add_option("--bind", bind, "host:port")->capture_default_str();

  auto* data = app.add_subcommand("data", "Training data tools");
  data->require_subcommand(1);
  auto* validate = data->add_subcommand("validate", "Parse and cross-check every input");
  validate->add_option("--config", config, "Pipeline config file")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(config, out);
    if (*evaluate) return cmd_evaluate(config, bundle, out, only);
    if (*shell) return cmd_shell(bundle);
    if (*serve) return cmd_serve(bundle, bind);
    if (*validate) return cmd_validate(config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
