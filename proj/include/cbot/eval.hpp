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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbot/corpus.hpp"
#include "cbot/crf.hpp"
#include "cbot/engine.hpp"
#include "cbot/folds.hpp"
#include "cbot/knn.hpp"
#include "cbot/svm.hpp"

namespace cbot {

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;  // [true][predicted]

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);

  // Unknown labels are appended (rows and columns grow together).
  void add(std::string_view truth, std::string_view predicted);
  std::size_t index_of(std::string_view label);
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t support(std::size_t row) const;
  // trace / total in percent; 0 when empty.
  double accuracy() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

struct ConfidenceRecord {
  double confidence;
  bool correct;

  bool operator==(const ConfidenceRecord&) const = default;
};

// 20 bins of width 0.05 over [0, 1]; 1.0 falls into the last bin.
struct ConfidenceHistogram {
  static constexpr std::size_t kBins = 20;
  std::array<std::size_t, kBins> correct{};
  std::array<std::size_t, kBins> incorrect{};

  static std::size_t bin(double confidence);
  static ConfidenceHistogram from(std::span<const ConfidenceRecord> records);
  bool operator==(const ConfidenceHistogram&) const = default;
};

struct IntentEval {
  double accuracy = 0.0;
  ConfusionMatrix matrix;
  std::vector<ConfidenceRecord> confidences;  // in fold order
};

// Train on every other fold, test on each fold in turn. A single fold
// trains and tests on everything. Folds run in parallel and are merged in
// fold order.
IntentEval eval_intents(std::span<const svm::LabeledVector> data, const svm::KernelSpec& kernel, double C,
                        const FoldSplit& splits, const svm::SvmParams& params = {});

struct EntityEval {
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  std::size_t gold_entities = 0;
  std::size_t predicted_entities = 0;
  std::size_t matched_entities = 0;  // exact span and entity name
  double token_accuracy = 0.0;       // percent
  double precision = 0.0;            // percent; 0 when nothing predicted
  double recall = 0.0;               // percent; 0 when nothing to find
  double f1 = 0.0;

  bool operator==(const EntityEval&) const = default;
};

EntityEval score_entities(std::span<const AnnotatedUtterance> gold,
                          std::span<const std::vector<BilouTag>> predicted_tags);
EntityEval eval_entities(std::span<const AnnotatedUtterance> data, const crf::CrfHyper& hyper,
                         const FoldSplit& splits);

struct StoryOutcome {
  std::string name;
  bool passed = false;
  std::size_t actions = 0;
  std::size_t mismatches = 0;

  bool operator==(const StoryOutcome&) const = default;
};

struct StoryEval {
  bool empty = true;  // no stories: accuracies undefined
  std::size_t stories = 0;
  std::size_t passed = 0;
  std::size_t actions = 0;
  std::size_t correct_actions = 0;
  double story_accuracy = 0.0;
  double action_accuracy = 0.0;
  ConfusionMatrix matrix;  // expected x predicted action
  std::vector<StoryOutcome> outcomes;

  bool operator==(const StoryEval&) const = default;
};

StoryEval summarize_stories(const std::vector<ReplayResult>& results);
StoryEval eval_stories(const Engine& engine, const std::vector<Story>& stories);

struct IntentSection {
  std::string kernel;
  double C = 0.0;
  std::size_t folds = 0;
  double accuracy = 0.0;
  ConfusionMatrix matrix;

  bool operator==(const IntentSection&) const = default;
};

struct EntitySection {
  std::size_t folds = 0;
  EntityEval scores;

  bool operator==(const EntitySection&) const = default;
};

struct KSweepSection {
  std::vector<knn::KRow> rows;
  std::size_t best_k = 0;
  std::size_t eval_size = 0;

  bool operator==(const KSweepSection&) const = default;
};

struct EvalReport {
  std::optional<IntentSection> intents;
  std::optional<std::vector<svm::KernelRow>> kernels;
  std::optional<ConfidenceHistogram> confidences;
  std::optional<EntitySection> entities;
  std::optional<StoryEval> stories;
  std::optional<KSweepSection> ksweep;

  bool operator==(const EvalReport&) const = default;
};

inline const std::vector<std::string> kReportSections = {"intents",  "kernels", "confidences",
                                                         "entities", "stories", "ksweep"};

enum class ReportFormat { kText, kJson, kCsv };

std::string emit_report(const EvalReport& report, ReportFormat format);
// Inverse of the JSON form.
EvalReport parse_report_json(std::string_view json);

}  // namespace cbot
