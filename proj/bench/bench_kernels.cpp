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

// Serial reference against OpenMP kernels on the bundled corpus.

#include <benchmark/benchmark.h>

#include "cbot/config.hpp"
#include "cbot/pipeline.hpp"

namespace {

using namespace cbot;

struct Fixture {
  PipelineConfig config;
  TrainingData data;
  std::vector<crf::TaggedSequence> sequences;
  crf::CrfModel crf;
  std::vector<svm::LabeledVector> vectors;
  knn::KnnIndex index;
  FeatureVector query;

  static const Fixture& get() {
    static const Fixture f = [] {
      Fixture x;
      x.config = load_config(std::filesystem::path(CBOT_DATA_DIR) / "chatbot.toml");
      x.data = load_training_data(x.config);
      x.sequences = entity_sequences(x.data.intents, true);
      x.crf = crf::train_crf(x.sequences, crf::CrfHyper{0.1, 0.1, 5, 0.1}).model;
      x.vectors = intent_vectors(x.data.intents, x.data.embeddings, true);
      x.index = knn::build_index(x.data.lexicon, x.config.corruption_spec(), x.config.knn_k, x.config.reject_radius);
      x.query = char_vector("khou hoc may tinh");
      return x;
    }();
    return f;
  }
};

void BM_CrfGradientSerial(benchmark::State& state) {
  const auto& f = Fixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(crf::reference::crf_gradient(f.crf, f.sequences));
}

void BM_CrfGradientParallel(benchmark::State& state) {
  const auto& f = Fixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(crf::crf_gradient(f.crf, f.sequences));
}

void BM_SvmTrainSerial(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto kernel = f.config.kernel_spec(f.config.kernel);
  for (auto _ : state) benchmark::DoNotOptimize(svm::reference::train_svm(f.vectors, kernel, 10.0));
}

void BM_SvmTrainParallel(benchmark::State& state) {
  const auto& f = Fixture::get();
  const auto kernel = f.config.kernel_spec(f.config.kernel);
  for (auto _ : state) benchmark::DoNotOptimize(svm::train_svm(f.vectors, kernel, 10.0));
}

void BM_KnnDistancesSerial(benchmark::State& state) {
  const auto& f = Fixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(knn::reference::distances(f.index, f.query));
}

void BM_KnnDistancesParallel(benchmark::State& state) {
  const auto& f = Fixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(knn::distances(f.index, f.query));
}

}  // namespace

BENCHMARK(BM_CrfGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrfGradientParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SvmTrainSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SvmTrainParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnDistancesSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KnnDistancesParallel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
