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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cbot/config.hpp"
#include "cbot/corpus.hpp"
#include "cbot/crf.hpp"
#include "cbot/engine.hpp"
#include "cbot/eval.hpp"
#include "cbot/knn.hpp"
#include "cbot/policy.hpp"
#include "cbot/svm.hpp"

namespace cbot {

struct TrainingData {
  std::vector<IntentDef> intents;
  std::vector<ResponseTemplate> templates;
  std::vector<Story> stories;
  std::vector<Story> test_stories;
  knn::EntityLexicon lexicon;  // file entries merged with corpus span values
  KnowledgeBase knowledge;
  EmbeddingTable embeddings;
  DomainSpec domain;
  // Input name -> FNV-1a of the file bytes.
  std::map<std::string, std::uint64_t> checksums;
};

// Reads, parses and validates every input named by the config. Errors name
// the offending path.
TrainingData load_training_data(const PipelineConfig& config);

// Sentence vectors of every pattern (plus diacritic-free copies when enabled).
std::vector<svm::LabeledVector> intent_vectors(const std::vector<IntentDef>& intents, const EmbeddingTable& table,
                                               bool augment);
std::vector<crf::TaggedSequence> entity_sequences(const std::vector<IntentDef>& intents, bool augment);

struct TrainingReport {
  svm::GridSearchResult grid;
  std::size_t support_vectors = 0;
  std::vector<double> crf_objective;
  std::size_t crf_nonzero = 0;
  std::size_t knn_points = 0;
  std::size_t policy_examples = 0;
  policy::TrainingTrace policy;
};

struct TrainedEngine {
  Engine engine;
  TrainingReport report;
};

TrainedEngine train_engine(const TrainingData& data, const PipelineConfig& config);

// Runs the selected report sections (all when `sections` is empty). Story
// replay and the k-sweep use `engine`. Stories come from the test set when
// one is configured, otherwise from the training stories. The k-sweep scores
// fresh corruptions that do not occur in the index.
EvalReport run_evaluation(const TrainingData& data, const PipelineConfig& config, const Engine& engine,
                          const std::set<std::string>& sections = {});

}  // namespace cbot
