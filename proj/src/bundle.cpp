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

#include "cbot/bundle.hpp"

#include <fstream>

#include "cbot/error.hpp"
#include "cbot/util.hpp"
#include "json.hpp"

namespace cbot {
namespace {

using nlohmann::json;

const char* const kFiles[] = {"config.json", "crf.json", "domain.json", "embeddings.json", "knn.json",
                              "knowledge.json", "policy.json", "settings.json", "svm.json"};

std::uint64_t parse_hex(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw ModelError("invalid checksum '" + s + "'");
  return v;
}

json domain_json(const DomainSpec& d) {
  json templates = json::object();
  for (const auto& [name, t] : d.templates) templates[name] = t.variants;
  return {{"intents", d.intents},
          {"entities", d.entity_names},
          {"slots", d.slot_names},
          {"actions", d.actions},
          {"templates", templates},
          {"fingerprint", hex64(d.fingerprint())}};
}

DomainSpec domain_from(const json& j) {
  DomainSpec d;
  d.intents = j.at("intents").get<std::vector<std::string>>();
  d.entity_names = j.at("entities").get<std::vector<std::string>>();
  d.slot_names = j.at("slots").get<std::vector<std::string>>();
  d.actions = j.at("actions").get<std::vector<std::string>>();
  for (const auto& [name, variants] : j.at("templates").items())
    d.templates[name] = {name, variants.get<std::vector<std::string>>()};
  return d;
}

json embeddings_json(const EmbeddingTable& t) {
  json vectors = json::object();
  for (const auto& [word, v] : t.vectors()) vectors[word] = v;
  return {{"dimension", t.dimension()}, {"fallback_seed", hex64(t.fallback_seed())}, {"vectors", vectors}};
}

EmbeddingTable embeddings_from(const json& j) {
  EmbeddingTable t(j.at("dimension").get<std::size_t>(), parse_hex(j.at("fallback_seed").get<std::string>()));
  for (const auto& [word, v] : j.at("vectors").items()) t.add(word, v.get<Vector>());
  return t;
}

json svm_json(const svm::SvmModel& m) {
  json machines = json::array();
  for (const auto& bm : m.machines)
    machines.push_back({{"positive", bm.positive},
                        {"negative", bm.negative},
                        {"bias", bm.bias},
                        {"iterations", bm.iterations},
                        {"converged", bm.converged},
                        {"coef", bm.coef},
                        {"support_indices", bm.support_indices},
                        {"support_vectors", bm.support_vectors}});
  return {{"classes", m.classes},
          {"kernel",
           {{"kind", svm::kernel_name(m.kernel.kind)},
            {"gamma", m.kernel.gamma},
            {"degree", m.kernel.degree},
            {"coef0", m.kernel.coef0}}},
          {"C", m.C},
          {"dimension", m.dimension},
          {"machines", machines}};
}

svm::SvmModel svm_from(const json& j) {
  svm::SvmModel m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  const auto& k = j.at("kernel");
  m.kernel.kind = svm::parse_kernel(k.at("kind").get<std::string>());
  m.kernel.gamma = k.at("gamma").get<double>();
  m.kernel.degree = k.at("degree").get<int>();
  m.kernel.coef0 = k.at("coef0").get<double>();
  m.C = j.at("C").get<double>();
  m.dimension = j.at("dimension").get<std::size_t>();
  for (const auto& bm : j.at("machines")) {
    svm::BinaryMachine b;
    b.positive = bm.at("positive").get<std::size_t>();
    b.negative = bm.at("negative").get<std::size_t>();
    b.bias = bm.at("bias").get<double>();
    b.iterations = bm.at("iterations").get<std::size_t>();
    b.converged = bm.at("converged").get<bool>();
    b.coef = bm.at("coef").get<std::vector<double>>();
    b.support_indices = bm.at("support_indices").get<std::vector<std::size_t>>();
    b.support_vectors = bm.at("support_vectors").get<std::vector<Vector>>();
    m.machines.push_back(std::move(b));
  }
  return m;
}

json crf_json(const crf::CrfModel& m) {
  json emission = json::array();
  const std::size_t L = m.num_labels();
  for (std::size_t f = 0; f < m.num_features(); ++f)
    for (std::size_t y = 0; y < L; ++y)
      if (m.emission(f, y) != 0.0) emission.push_back({f, y, m.emission(f, y)});
  const auto& h = m.hyper();
  return {{"labels", m.labels()},
          {"features", m.features()},
          {"hyper",
           {{"l1", h.l1}, {"l2", h.l2}, {"max_iterations", h.max_iterations}, {"initial_step", h.initial_step}}},
          {"emission", emission},
          {"transition", m.transition_weights()}};
}

crf::CrfModel crf_from(const json& j) {
  crf::CrfHyper h;
  const auto& hj = j.at("hyper");
  h.l1 = hj.at("l1").get<double>();
  h.l2 = hj.at("l2").get<double>();
  h.max_iterations = hj.at("max_iterations").get<std::size_t>();
  h.initial_step = hj.at("initial_step").get<double>();
  crf::CrfModel m(j.at("labels").get<std::vector<std::string>>(), j.at("features").get<std::vector<std::string>>(),
                  h);
  for (const auto& e : j.at("emission")) {
    const auto f = e.at(0).get<std::size_t>();
    const auto y = e.at(1).get<std::size_t>();
    if (f >= m.num_features() || y >= m.num_labels()) throw ModelError("crf emission index out of range");
    m.emission(f, y) = e.at(2).get<double>();
  }
  auto t = j.at("transition").get<std::vector<double>>();
  if (t.size() != m.transition_weights().size()) throw ModelError("crf transition matrix has the wrong size");
  m.transition_weights() = std::move(t);
  return m;
}

json knn_json(const knn::KnnIndex& idx) {
  json points = json::array();
  for (const auto& p : idx.points) points.push_back({p.surface, p.canonical});
  return {{"k", idx.k}, {"reject_radius", idx.reject_radius}, {"points", points}};
}

knn::KnnIndex knn_from(const json& j) {
  knn::KnnIndex idx;
  idx.k = j.at("k").get<std::size_t>();
  idx.reject_radius = j.at("reject_radius").get<double>();
  for (const auto& p : j.at("points")) {
    knn::IndexPoint ip;
    ip.surface = p.at(0).get<std::string>();
    ip.canonical = p.at(1).get<std::string>();
    ip.vector = char_vector(ip.surface);
    idx.points.push_back(std::move(ip));
  }
  return idx;
}

json policy_json(const policy::PolicyModel& m) {
  return {{"input_size", m.input_size},   {"hidden", m.hidden},
          {"outputs", m.outputs},         {"max_history", m.max_history},
          {"domain_fingerprint", hex64(m.domain_fingerprint)}, {"params", m.params}};
}

policy::PolicyModel policy_from(const json& j) {
  policy::PolicyModel m;
  m.input_size = j.at("input_size").get<std::size_t>();
  m.hidden = j.at("hidden").get<std::size_t>();
  m.outputs = j.at("outputs").get<std::size_t>();
  m.max_history = j.at("max_history").get<std::size_t>();
  m.domain_fingerprint = parse_hex(j.at("domain_fingerprint").get<std::string>());
  m.params = j.at("params").get<std::vector<double>>();
  if (m.params.size() != m.param_count()) throw ModelError("policy parameter count does not match its shape");
  return m;
}

json knowledge_json(const KnowledgeBase& kb) {
  json rows = json::array();
  for (const auto& [key, answer] : kb.entries) rows.push_back({key.first, key.second, answer});
  return rows;
}

KnowledgeBase knowledge_from(const json& j) {
  KnowledgeBase kb;
  for (const auto& r : j) kb.entries[{r.at(0).get<std::string>(), r.at(1).get<std::string>()}] = r.at(2).get<std::string>();
  return kb;
}

json settings_json(const EngineSettings& s) {
  return {{"confidence_threshold", s.confidence_threshold},
          {"max_actions", s.max_actions},
          {"action_slots", s.action_slots},
          {"missing_answer_text", s.missing_answer_text},
          {"low_confidence_text", s.low_confidence_text}};
}

EngineSettings settings_from(const json& j) {
  EngineSettings s;
  s.confidence_threshold = j.at("confidence_threshold").get<double>();
  s.max_actions = j.at("max_actions").get<std::size_t>();
  s.action_slots = j.at("action_slots").get<std::map<std::string, std::string>>();
  s.missing_answer_text = j.at("missing_answer_text").get<std::string>();
  s.low_confidence_text = j.at("low_confidence_text").get<std::string>();
  return s;
}

json config_json(const PipelineConfig& c) {
  json rules = json::array();
  for (auto r : c.corruption_rules) rules.push_back(knn::rule_name(r));
  return {{"seed", c.seed},
          {"embedding_dim", c.embedding_dim},
          {"augment_diacritics", c.augment_diacritics},
          {"svm", {{"kernel", svm::kernel_name(c.kernel)}, {"c_grid", c.c_grid}, {"gamma", c.gamma}, {"folds", c.svm_folds}}},
          {"crf",
           {{"l1", c.crf.l1},
            {"l2", c.crf.l2},
            {"max_iterations", c.crf.max_iterations},
            {"initial_step", c.crf.initial_step}}},
          {"knn",
           {{"k", c.knn_k},
            {"reject_radius", c.reject_radius},
            {"variants_per_value", c.variants_per_value},
            {"rules", rules}}},
          {"policy",
           {{"hidden", c.policy.hidden},
            {"max_history", c.policy.max_history},
            {"epochs", c.policy.epochs},
            {"learning_rate", c.policy.learning_rate},
            {"clip_norm", c.policy.clip_norm},
            {"target_loss", c.policy.target_loss}}}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

}  // namespace

void save_bundle(const Engine& engine, const PipelineConfig& config,
                 const std::map<std::string, std::uint64_t>& training_checksums, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::map<std::string, json> docs = {
      {"config.json", config_json(config)},
      {"crf.json", crf_json(engine.crf)},
      {"domain.json", domain_json(engine.domain)},
      {"embeddings.json", embeddings_json(engine.embeddings)},
      {"knn.json", knn_json(engine.knn)},
      {"knowledge.json", knowledge_json(engine.knowledge)},
      {"policy.json", policy_json(engine.policy)},
      {"settings.json", settings_json(engine.settings)},
      {"svm.json", svm_json(engine.svm)},
  };
  json files = json::object();
  for (const auto& [name, doc] : docs) {
    const std::string text = dump(doc);
    files[name] = hex64(fnv1a(text));
    write_text(dir / name, text);
  }
  json data = json::object();
  for (const auto& [name, sum] : training_checksums) data[name] = hex64(sum);
  const json manifest = {{"schema_version", kBundleSchemaVersion},
                         {"domain_fingerprint", hex64(engine.domain.fingerprint())},
                         {"training_data", data},
                         {"files", files}};
  write_text(dir / "manifest.json", dump(manifest));
}

LoadedBundle load_bundle(const std::filesystem::path& dir) {
  LoadedBundle b;
  try {
    const auto mj = json::parse(read_file(dir / "manifest.json"));
    b.manifest.schema_version = mj.at("schema_version").get<int>();
    if (b.manifest.schema_version != kBundleSchemaVersion)
      throw ModelError("unsupported bundle schema version " + std::to_string(b.manifest.schema_version));
    b.manifest.domain_fingerprint = parse_hex(mj.at("domain_fingerprint").get<std::string>());
    for (const auto& [name, sum] : mj.at("training_data").items())
      b.manifest.training_data[name] = parse_hex(sum.get<std::string>());
    for (const auto& [name, sum] : mj.at("files").items()) b.manifest.files[name] = parse_hex(sum.get<std::string>());

    std::map<std::string, json> docs;
    for (const char* name : kFiles) {
      auto it = b.manifest.files.find(name);
      if (it == b.manifest.files.end()) throw ModelError(std::string("manifest does not list ") + name);
      const std::string text = read_file(dir / name);
      if (fnv1a(text) != it->second) throw ModelError(std::string("checksum mismatch for ") + name);
      docs[name] = json::parse(text);
    }
    Engine& e = b.engine;
    e.domain = domain_from(docs["domain.json"]);
    if (e.domain.fingerprint() != b.manifest.domain_fingerprint)
      throw ModelError("domain fingerprint does not match the manifest");
    e.embeddings = embeddings_from(docs["embeddings.json"]);
    e.svm = svm_from(docs["svm.json"]);
    e.crf = crf_from(docs["crf.json"]);
    e.knn = knn_from(docs["knn.json"]);
    e.policy = policy_from(docs["policy.json"]);
    e.knowledge = knowledge_from(docs["knowledge.json"]);
    e.settings = settings_from(docs["settings.json"]);
    b.seed = docs["config.json"].at("seed").get<std::uint64_t>();
    e.validate();
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ModelError("cannot load bundle " + dir.string() + ": " + ex.what());
  }
  return b;
}

}  // namespace cbot
