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

#include <regex>
#include <sstream>

#include "cbot/eval.hpp"
#include "cbot/util.hpp"
#include "support.hpp"

using namespace cbot;

namespace {

std::vector<svm::LabeledVector> clusters(std::size_t per_class) {
  Rng rng(14);
  std::vector<svm::LabeledVector> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    out.push_back({{rng.uniform(-3, -2), rng.uniform(-1, 1)}, "a"});
    out.push_back({{rng.uniform(2, 3), rng.uniform(-1, 1)}, "b"});
    out.push_back({{rng.uniform(-1, 1), rng.uniform(5, 6)}, "c"});
  }
  return out;
}

std::vector<std::string> labels_of(const std::vector<svm::LabeledVector>& d) {
  std::vector<std::string> out;
  for (const auto& x : d) out.push_back(x.label);
  return out;
}

std::vector<BilouTag> tags(std::initializer_list<const char*> names) {
  std::vector<BilouTag> out;
  for (const char* n : names) out.push_back(BilouTag::parse(n));
  return out;
}

const EvalReport& full_report() {
  static const EvalReport r = [] {
    const auto& b = testing::bundled();
    return run_evaluation(b.data, b.config, b.trained.engine);
  }();
  return r;
}

}  // namespace

TEST_CASE("confusion matrix bookkeeping") {
  ConfusionMatrix m({"a", "b"});
  m.add("a", "a");
  m.add("a", "b");
  m.add("b", "b");
  m.add("c", "a");
  CHECK(m.labels == std::vector<std::string>{"a", "b", "c"});
  CHECK(m.total() == 4);
  CHECK(m.trace() == 2);
  CHECK(m.support(0) == 2);
  CHECK(m.accuracy() == doctest::Approx(50.0));
  CHECK(ConfusionMatrix().accuracy() == 0.0);
}

TEST_CASE("histogram bins") {
  CHECK(ConfidenceHistogram::bin(0.0) == 0);
  CHECK(ConfidenceHistogram::bin(0.049) == 0);
  CHECK(ConfidenceHistogram::bin(0.05) == 1);
  CHECK(ConfidenceHistogram::bin(1.0) == 19);
  const std::vector<ConfidenceRecord> recs{{0.9, true}, {0.91, false}, {0.2, true}};
  const auto h = ConfidenceHistogram::from(recs);
  CHECK(h.correct[18] == 1);
  CHECK(h.incorrect[18] == 1);
  CHECK(h.correct[4] == 1);
}

TEST_CASE("separable intents score 100 with a diagonal matrix") {
  const auto data = clusters(10);
  const auto labels = labels_of(data);
  const auto split = stratified_kfold(labels, 5, 1);
  const auto e = eval_intents(data, svm::KernelSpec::with_defaults(svm::KernelKind::kLinear, 2), 1.0, split);
  CHECK(e.accuracy == 100.0);
  for (std::size_t i = 0; i < e.matrix.labels.size(); ++i)
    for (std::size_t j = 0; j < e.matrix.labels.size(); ++j)
      if (i != j) CHECK(e.matrix.counts[i][j] == 0);
  CHECK(e.confidences.size() == data.size());
}

TEST_CASE("reported accuracy is trace over total") {
  const auto data = clusters(10);
  auto noisy = data;
  for (std::size_t i = 0; i < noisy.size(); i += 4) noisy[i].x = {0.0, 2.0};
  const auto split = stratified_kfold(labels_of(noisy), 5, 2);
  const auto e = eval_intents(noisy, svm::KernelSpec::with_defaults(svm::KernelKind::kRbf, 2), 1.0, split);
  CHECK(e.accuracy == doctest::Approx(100.0 * e.matrix.trace() / e.matrix.total()));
  CHECK(e.matrix.total() == noisy.size());
}

TEST_CASE("entity scoring: perfect, all-O and non-identity cases") {
  const std::vector<AnnotatedUtterance> gold{parse_annotated("[học phần](dn) là gì")};
  const std::vector<std::vector<BilouTag>> perfect{tags({"B-dn", "L-dn", "O", "O"})};
  const auto p = score_entities(gold, perfect);
  CHECK(p.token_accuracy == 100.0);
  CHECK(p.f1 == 100.0);

  const std::vector<std::vector<BilouTag>> none{tags({"O", "O", "O", "O"})};
  const auto n = score_entities(gold, none);
  CHECK(n.recall == 0.0);
  CHECK(n.precision == 0.0);
  CHECK(n.token_accuracy == 50.0);
  CHECK(n.token_accuracy > n.f1);

  const std::vector<AnnotatedUtterance> dense{parse_annotated("[a](x) [b](x)")};
  const std::vector<std::vector<BilouTag>> half{tags({"U-x", "O"})};
  const auto h = score_entities(dense, half);
  CHECK(h.token_accuracy == 50.0);
  CHECK(h.f1 > h.token_accuracy);
}

TEST_CASE("a memorized single sequence scores 100 on both metrics") {
  const std::vector<AnnotatedUtterance> data{parse_annotated("[học phần](dn) là gì")};
  FoldSplit one;
  one.folds = {{0}};
  const auto e = eval_entities(data, crf::CrfHyper{}, one);
  CHECK(e.token_accuracy == 100.0);
  CHECK(e.f1 == 100.0);
}

TEST_CASE("story summaries") {
  std::vector<ReplayResult> results;
  for (int i = 0; i < 8; ++i) {
    ReplayResult r;
    r.story = "s" + std::to_string(i);
    r.actions = {{"utter_a", "utter_a"}, {"utter_b", i < 6 ? "utter_b" : "utter_c"}};
    r.passed = i < 6;
    results.push_back(r);
  }
  const auto s = summarize_stories(results);
  CHECK_FALSE(s.empty);
  CHECK(s.story_accuracy == doctest::Approx(75.0));
  CHECK(s.action_accuracy == doctest::Approx(100.0 * 14 / 16));
  CHECK(s.matrix.total() == 16);

  const auto empty = summarize_stories({});
  CHECK(empty.empty);
  EvalReport r;
  r.stories = empty;
  CHECK(emit_report(r, ReportFormat::kText).find("no stories: accuracies undefined") != std::string::npos);
  CHECK(parse_report_json(emit_report(r, ReportFormat::kJson)) == r);
}

TEST_CASE("full report has every section with the expected shapes") {
  const auto& r = full_report();
  REQUIRE(r.intents);
  REQUIRE(r.kernels);
  REQUIRE(r.confidences);
  REQUIRE(r.entities);
  REQUIRE(r.stories);
  REQUIRE(r.ksweep);
  CHECK(r.kernels->size() == 4);
  CHECK(r.ksweep->rows.size() == 5);
  CHECK(r.intents->folds == 10);
  CHECK(r.intents->accuracy == doctest::Approx(100.0 * r.intents->matrix.trace() / r.intents->matrix.total()));

  const std::string text = emit_report(r, ReportFormat::kText);
  for (const auto& k : *r.kernels) {
    const std::regex row("\\n" + k.kernel + " +[0-9.]+ +[0-9]+\\.[0-9]{2}\\n");
    CHECK_MESSAGE(std::regex_search(text, row), k.kernel);
  }
}

TEST_CASE("json round trip and csv layout") {
  const auto& r = full_report();
  const auto json = emit_report(r, ReportFormat::kJson);
  CHECK(parse_report_json(json) == r);
  CHECK(emit_report(parse_report_json(json), ReportFormat::kJson) == json);

  std::istringstream csv(emit_report(r, ReportFormat::kCsv));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "section,row,column,value");
  std::size_t kernel_rows = 0;
  while (std::getline(csv, line))
    if (line.rfind("kernels,", 0) == 0 && line.find(",accuracy,") != std::string::npos) ++kernel_rows;
  CHECK(kernel_rows == 4);
}

TEST_CASE("section filter") {
  const auto& b = testing::bundled();
  const auto r = run_evaluation(b.data, b.config, b.trained.engine, {"kernels"});
  CHECK(r.kernels);
  CHECK_FALSE(r.intents);
  CHECK_FALSE(r.confidences);
  CHECK_FALSE(r.entities);
  CHECK_FALSE(r.stories);
  CHECK_FALSE(r.ksweep);
  CHECK(r.kernels == full_report().kernels);
  CHECK_THROWS(run_evaluation(b.data, b.config, b.trained.engine, {"bogus"}));
}
