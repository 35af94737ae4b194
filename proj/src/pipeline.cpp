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

#include "cbot/pipeline.hpp"

#include <algorithm>
#include <set>

#include "cbot/error.hpp"
#include "cbot/util.hpp"

namespace cbot {
namespace {

template <typename F>
auto parse_file(const PipelineConfig& config, const std::string& name, const std::string& path,
                std::map<std::string, std::uint64_t>& checksums, F parse) {
  const auto full = config.resolve(path);
  std::string text;
  try {
    text = read_file(full);
  } catch (const Error&) {
    throw Error("cannot read " + name + " file " + full.string());
  }
  checksums[name] = fnv1a(text);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw ParseError(full.string() + ": " + e.what(), 0);
  }
}

std::vector<std::string> custom_actions(const PipelineConfig& config) {
  std::vector<std::string> out;
  for (const auto& [action, slot] : config.engine.action_slots) out.push_back(action);
  return out;
}

}  // namespace

TrainingData load_training_data(const PipelineConfig& config) {
  TrainingData d;
  auto& sums = d.checksums;
  d.intents = parse_file(config, "nlu", config.paths.nlu, sums, parse_nlu);
  d.templates = parse_file(config, "templates", config.paths.templates, sums, parse_templates);
  d.stories = parse_file(config, "stories", config.paths.stories, sums, parse_stories);
  if (!config.paths.test_stories.empty())
    d.test_stories = parse_file(config, "test_stories", config.paths.test_stories, sums, parse_stories);
  d.knowledge = parse_file(config, "knowledge", config.paths.knowledge, sums, KnowledgeBase::parse);
  if (!config.paths.lexicon.empty())
    d.lexicon = parse_file(config, "lexicon", config.paths.lexicon, sums, knn::EntityLexicon::parse);
  d.lexicon.merge(knn::EntityLexicon::from_intents(d.intents));
  const auto seed = config.stage_seed("embeddings");
  if (config.paths.embeddings.empty()) {
    d.embeddings = EmbeddingTable(config.embedding_dim, seed);
  } else {
    d.embeddings = parse_file(config, "embeddings", config.paths.embeddings, sums,
                              [&](const std::string& t) { return EmbeddingTable::load(t, seed); });
    if (d.embeddings.dimension() != config.embedding_dim)
      throw ValidationError("embedding table has dimension " + std::to_string(d.embeddings.dimension()) +
                            ", config says " + std::to_string(config.embedding_dim));
  }

  std::vector<Story> all = d.stories;
  all.insert(all.end(), d.test_stories.begin(), d.test_stories.end());
  d.domain = build_domain(d.intents, d.templates, all, custom_actions(config));

  std::vector<std::string> problems;
  for (const auto& [action, slot] : config.engine.action_slots)
    if (d.domain.slot_index(slot) < 0) problems.push_back("action " + action + " reads unknown slot " + slot);
  for (const auto& e : d.lexicon.entries)
    if (d.domain.entity_index(e.entity_name) < 0)
      problems.push_back("lexicon value '" + e.value + "' has unknown entity " + e.entity_name);
  for (const auto& [key, answer] : d.knowledge.entries)
    if (!config.engine.action_slots.count(key.first))
      problems.push_back("knowledge entry for unmapped action " + key.first);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return d;
}

std::vector<svm::LabeledVector> intent_vectors(const std::vector<IntentDef>& intents, const EmbeddingTable& table,
                                               bool augment) {
  std::vector<svm::LabeledVector> out;
  for (const auto& intent : intents) {
    for (const auto& p : intent.patterns) {
      out.push_back({sentence_vector(tokenize(p.text), table), intent.name});
      if (augment) {
        const auto stripped = strip_diacritics(p);
        if (stripped.text != p.text) out.push_back({sentence_vector(tokenize(stripped.text), table), intent.name});
      }
    }
  }
  return out;
}

std::vector<crf::TaggedSequence> entity_sequences(const std::vector<IntentDef>& intents, bool augment) {
  std::vector<crf::TaggedSequence> out;
  for (const auto& intent : intents) {
    for (const auto& p : intent.patterns) {
      if (p.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      out.push_back(crf::make_sequence(p));
      if (augment) {
        const auto stripped = strip_diacritics(p);
        if (stripped.text != p.text) out.push_back(crf::make_sequence(stripped));
      }
    }
  }
  return out;
}

TrainedEngine train_engine(const TrainingData& data, const PipelineConfig& config) {
  TrainedEngine t;
  Engine& e = t.engine;
  e.domain = data.domain;
  e.embeddings = data.embeddings;
  e.knowledge = data.knowledge;
  e.settings = config.engine;

  const auto vectors = intent_vectors(data.intents, data.embeddings, config.augment_diacritics);
  const auto kernel = config.kernel_spec(config.kernel);
  t.report.grid =
      svm::grid_search_C(vectors, kernel, config.c_grid, config.svm_folds, config.stage_seed("svm-grid"));
  e.svm = svm::train_svm(vectors, kernel, t.report.grid.best_C);
  for (const auto& m : e.svm.machines) t.report.support_vectors += m.coef.size();

  auto crf_result = crf::train_crf(entity_sequences(data.intents, config.augment_diacritics), config.crf);
  e.crf = std::move(crf_result.model);
  t.report.crf_objective = std::move(crf_result.objective_trace);
  t.report.crf_nonzero = e.crf.nonzero_weights();

  e.knn = knn::build_index(data.lexicon, config.corruption_spec(), config.knn_k, config.reject_radius);
  t.report.knn_points = e.knn.points.size();

  auto pconf = config.policy;
  pconf.seed = config.stage_seed("policy");
  const auto examples = policy::stories_to_sequences(data.stories, data.domain, pconf.max_history);
  t.report.policy_examples = examples.size();
  auto pol = policy::train_policy(examples, data.domain, pconf);
  e.policy = std::move(pol.model);
  t.report.policy = std::move(pol.trace);

  e.validate();
  return t;
}

EvalReport run_evaluation(const TrainingData& data, const PipelineConfig& config, const Engine& engine,
                          const std::set<std::string>& sections) {
  for (const auto& s : sections)
    if (std::find(kReportSections.begin(), kReportSections.end(), s) == kReportSections.end())
      throw Error("unknown report section '" + s + "'");
  auto want = [&](const char* s) { return sections.empty() || sections.count(s) > 0; };
  EvalReport r;

  std::vector<AnnotatedUtterance> utterances;
  std::vector<std::string> labels;
  for (const auto& intent : data.intents)
    for (const auto& p : intent.patterns) {
      utterances.push_back(p);
      labels.push_back(intent.name);
    }
  const auto splits = stratified_kfold(labels, config.eval_folds, config.stage_seed("eval-folds"));

  if (want("intents") || want("confidences") || want("kernels")) {
    const auto vectors = intent_vectors(data.intents, data.embeddings, false);
    if (want("kernels")) {
      std::vector<svm::KernelSpec> kernels;
      for (const auto& k : config.eval_kernels) kernels.push_back(config.kernel_spec(svm::parse_kernel(k)));
      r.kernels = svm::kernel_sweep(vectors, kernels, config.c_grid, config.eval_folds,
                                    config.stage_seed("eval-kernels"));
    }
    if (want("intents") || want("confidences")) {
      const auto kernel = config.kernel_spec(config.kernel);
      const double C =
          svm::grid_search_C(vectors, kernel, config.c_grid, config.svm_folds, config.stage_seed("svm-grid")).best_C;
      const auto result = eval_intents(vectors, kernel, C, splits);
      if (want("intents"))
        r.intents = IntentSection{svm::kernel_name(config.kernel), C, splits.size(), result.accuracy, result.matrix};
      if (want("confidences")) r.confidences = ConfidenceHistogram::from(result.confidences);
    }
  }
  if (want("entities")) r.entities = EntitySection{splits.size(), eval_entities(utterances, config.crf, splits)};
  if (want("stories"))
    r.stories = eval_stories(engine, data.test_stories.empty() ? data.stories : data.test_stories);
  if (want("ksweep")) {
    auto spec = config.corruption_spec();
    spec.seed = config.stage_seed("knn-eval");
    std::set<std::string> indexed;
    for (const auto& p : engine.knn.points) indexed.insert(p.surface);
    std::vector<knn::LabeledSurface> eval;
    for (auto& s : knn::make_eval_set(data.lexicon, spec))
      if (!indexed.count(s.surface)) eval.push_back(std::move(s));
    const auto sweep = knn::k_sweep(engine.knn, eval, config.eval_ks);
    r.ksweep = KSweepSection{sweep.rows, sweep.best_k, eval.size()};
  }
  return r;
}

}  // namespace cbot
