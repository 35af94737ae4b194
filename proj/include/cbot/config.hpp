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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cbot/crf.hpp"
#include "cbot/engine.hpp"
#include "cbot/knn.hpp"
#include "cbot/policy.hpp"
#include "cbot/svm.hpp"

namespace cbot {

// Pipeline settings read from a flat TOML subset: [section] headers and
// `key = value` lines where a value is a quoted string, a number, a boolean
// or a one-line array of those.
struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  struct Paths {
    std::string nlu = "nlu.md";
    std::string templates = "templates.yml";
    std::string stories = "stories.md";
    std::string test_stories;  // optional
    std::string lexicon;       // optional
    std::string knowledge = "knowledge.tsv";
    std::string embeddings;  // optional; hash fallback vectors otherwise

    bool operator==(const Paths&) const = default;
  } paths;

  std::uint64_t seed = 42;

  // Word embeddings used when no table (or an incomplete one) is given.
  std::size_t embedding_dim = 50;
  // Add diacritic-free copies of every pattern to the NLU training data.
  bool augment_diacritics = true;

  svm::KernelKind kernel = svm::KernelKind::kRbf;
  std::vector<double> c_grid = svm::kDefaultCGrid;
  double gamma = 0.0;  // 0 selects 1 / embedding dimension
  std::size_t svm_folds = 5;

  crf::CrfHyper crf;

  std::size_t knn_k = 17;
  double reject_radius = 3.0;
  std::size_t variants_per_value = 20;
  std::vector<knn::CorruptionRule> corruption_rules = knn::CorruptionSpec{}.rules;

  policy::PolicyConfig policy;

  EngineSettings engine = default_engine_settings();

  std::size_t eval_folds = 10;
  std::vector<std::size_t> eval_ks = knn::kDefaultKs;
  std::vector<std::string> eval_kernels = {"linear", "poly", "sigmoid", "rbf"};

  std::filesystem::path resolve(const std::string& path) const;
  svm::KernelSpec kernel_spec(svm::KernelKind kind) const;
  knn::CorruptionSpec corruption_spec() const;
  // Independent stream per named stage.
  std::uint64_t stage_seed(std::string_view stage) const;

  static EngineSettings default_engine_settings();

  bool operator==(const PipelineConfig&) const = default;
};

// Throws ParseError (with line) on syntax errors and on unknown keys.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace cbot
