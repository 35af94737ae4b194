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

#include "cbot/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "cbot/error.hpp"
#include "json.hpp"

namespace cbot {
namespace {

using nlohmann::json;

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// Runs body(k) for every fold in parallel; rethrows the first failure by fold order.
template <typename F>
void for_each_fold(std::size_t folds, F body) {
  std::vector<std::exception_ptr> errors(folds);
  const long n = static_cast<long>(folds);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> training_set(const FoldSplit& splits, std::size_t k) {
  if (splits.size() == 1) return splits.folds[0];
  return splits.train_indices(k);
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

json matrix_json(const ConfusionMatrix& m) { return {{"labels", m.labels}, {"counts", m.counts}}; }

ConfusionMatrix matrix_from(const json& j) {
  ConfusionMatrix m(j.at("labels").get<std::vector<std::string>>());
  m.counts = j.at("counts").get<std::vector<std::vector<std::size_t>>>();
  return m;
}

void matrix_text(std::ostringstream& out, const ConfusionMatrix& m) {
  std::size_t w = 16;
  for (std::size_t i = 0; i < m.labels.size(); ++i)
    w = std::max(w, ("[" + std::to_string(i) + "] " + m.labels[i]).size());
  out << pad_right("true \\ predicted", w + 2);
  for (std::size_t j = 0; j < m.labels.size(); ++j) out << ' ' << pad_left("[" + std::to_string(j) + "]", 5);
  out << '\n';
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out << pad_right("[" + std::to_string(i) + "] " + m.labels[i], w + 2);
    for (auto c : m.counts[i]) out << ' ' << pad_left(std::to_string(c), 5);
    out << '\n';
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) { return json(v).dump(); }

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> l) : labels(std::move(l)) {
  counts.assign(labels.size(), std::vector<std::size_t>(labels.size(), 0));
}

std::size_t ConfusionMatrix::index_of(std::string_view label) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  labels.emplace_back(label);
  for (auto& row : counts) row.push_back(0);
  counts.emplace_back(labels.size(), 0);
  return labels.size() - 1;
}

void ConfusionMatrix::add(std::string_view truth, std::string_view predicted) {
  const auto i = index_of(truth);
  const auto j = index_of(predicted);
  ++counts[i][j];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t row) const {
  std::size_t t = 0;
  for (auto c : counts.at(row)) t += c;
  return t;
}

double ConfusionMatrix::accuracy() const { return percent(trace(), total()); }

std::size_t ConfidenceHistogram::bin(double confidence) {
  if (!(confidence > 0)) return 0;
  const auto b = static_cast<std::size_t>(confidence * static_cast<double>(kBins));
  return std::min(b, kBins - 1);
}

ConfidenceHistogram ConfidenceHistogram::from(std::span<const ConfidenceRecord> records) {
  ConfidenceHistogram h;
  for (const auto& r : records) ++(r.correct ? h.correct : h.incorrect)[bin(r.confidence)];
  return h;
}

IntentEval eval_intents(std::span<const svm::LabeledVector> data, const svm::KernelSpec& kernel, double C,
                        const FoldSplit& splits, const svm::SvmParams& params) {
  std::vector<std::vector<svm::IntentPrediction>> predictions(splits.size());
  for_each_fold(splits.size(), [&](std::size_t k) {
    std::vector<svm::LabeledVector> train;
    for (auto i : training_set(splits, k)) train.push_back(data[i]);
    const auto model = svm::train_svm(train, kernel, C, params);
    for (auto i : splits.folds[k]) predictions[k].push_back(svm::predict_intent(model, data[i].x));
  });

  std::set<std::string> labels;
  for (const auto& d : data) labels.insert(d.label);
  IntentEval out;
  out.matrix = ConfusionMatrix({labels.begin(), labels.end()});
  for (std::size_t k = 0; k < splits.size(); ++k)
    for (std::size_t j = 0; j < splits.folds[k].size(); ++j) {
      const auto& truth = data[splits.folds[k][j]].label;
      const auto& p = predictions[k][j];
      out.matrix.add(truth, p.top());
      out.confidences.push_back({p.top_confidence(), p.top() == truth});
    }
  out.accuracy = out.matrix.accuracy();
  return out;
}

EntityEval score_entities(std::span<const AnnotatedUtterance> gold,
                          std::span<const std::vector<BilouTag>> predicted_tags) {
  if (gold.size() != predicted_tags.size()) throw Error("entity scoring needs one tag sequence per utterance");
  EntityEval e;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    const auto encoded = bilou_encode(gold[u]);
    const auto& pred = predicted_tags[u];
    if (pred.size() != encoded.size()) throw Error("predicted tag sequence has the wrong length");
    std::vector<Token> tokens;
    for (std::size_t t = 0; t < encoded.size(); ++t) {
      tokens.push_back(encoded[t].token);
      e.tokens++;
      e.correct_tokens += encoded[t].tag == pred[t];
    }
    std::set<std::tuple<std::size_t, std::size_t, std::string>> truth;
    for (const auto& s : gold[u].spans) truth.emplace(s.start, s.end, s.entity_name);
    const auto spans = bilou_decode(pred, tokens, gold[u].text);
    e.gold_entities += truth.size();
    e.predicted_entities += spans.size();
    for (const auto& s : spans) e.matched_entities += truth.count({s.start, s.end, s.entity_name});
  }
  e.token_accuracy = percent(e.correct_tokens, e.tokens);
  e.precision = percent(e.matched_entities, e.predicted_entities);
  e.recall = percent(e.matched_entities, e.gold_entities);
  e.f1 = e.precision + e.recall > 0 ? 2 * e.precision * e.recall / (e.precision + e.recall) : 0.0;
  return e;
}

EntityEval eval_entities(std::span<const AnnotatedUtterance> data, const crf::CrfHyper& hyper,
                         const FoldSplit& splits) {
  std::vector<std::vector<BilouTag>> predicted(data.size());
  for_each_fold(splits.size(), [&](std::size_t k) {
    std::vector<crf::TaggedSequence> train;
    for (auto i : training_set(splits, k))
      if (!tokenize(data[i].text).empty()) train.push_back(crf::make_sequence(data[i]));
    const auto model = crf::train_crf(train, hyper).model;
    for (auto i : splits.folds[k]) predicted[i] = crf::predict_tags(model, tokenize(data[i].text));
  });
  return score_entities(data, predicted);
}

StoryEval summarize_stories(const std::vector<ReplayResult>& results) {
  StoryEval e;
  e.empty = results.empty();
  std::set<std::string> labels;
  for (const auto& r : results)
    for (const auto& a : r.actions) {
      labels.insert(a.expected);
      labels.insert(a.predicted);
    }
  e.matrix = ConfusionMatrix({labels.begin(), labels.end()});
  for (const auto& r : results) {
    StoryOutcome o{r.story, r.passed, r.actions.size(), r.mismatches()};
    ++e.stories;
    e.passed += r.passed;
    e.actions += o.actions;
    e.correct_actions += o.actions - o.mismatches;
    for (const auto& a : r.actions) e.matrix.add(a.expected, a.predicted);
    e.outcomes.push_back(std::move(o));
  }
  e.story_accuracy = percent(e.passed, e.stories);
  e.action_accuracy = percent(e.correct_actions, e.actions);
  return e;
}

StoryEval eval_stories(const Engine& engine, const std::vector<Story>& stories) {
  return summarize_stories(replay_stories(engine, stories));
}

std::string emit_report(const EvalReport& r, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json j = json::object();
    if (r.intents)
      j["intents"] = {{"kernel", r.intents->kernel},
                      {"C", r.intents->C},
                      {"folds", r.intents->folds},
                      {"accuracy", r.intents->accuracy},
                      {"matrix", matrix_json(r.intents->matrix)}};
    if (r.kernels) {
      json rows = json::array();
      for (const auto& k : *r.kernels) rows.push_back({{"kernel", k.kernel}, {"best_C", k.best_C}, {"accuracy", k.accuracy}});
      j["kernels"] = rows;
    }
    if (r.confidences) {
      json bins = json::array();
      for (std::size_t b = 0; b < ConfidenceHistogram::kBins; ++b)
        bins.push_back({{"lower", 0.05 * static_cast<double>(b)},
                        {"upper", 0.05 * static_cast<double>(b + 1)},
                        {"correct", r.confidences->correct[b]},
                        {"incorrect", r.confidences->incorrect[b]}});
      j["confidences"] = {{"bins", bins}};
    }
    if (r.entities) {
      const auto& s = r.entities->scores;
      j["entities"] = {{"folds", r.entities->folds},
                       {"tokens", s.tokens},
                       {"correct_tokens", s.correct_tokens},
                       {"gold_entities", s.gold_entities},
                       {"predicted_entities", s.predicted_entities},
                       {"matched_entities", s.matched_entities},
                       {"token_accuracy", s.token_accuracy},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1}};
    }
    if (r.stories) {
      const auto& s = *r.stories;
      json outcomes = json::array();
      for (const auto& o : s.outcomes)
        outcomes.push_back({{"name", o.name}, {"passed", o.passed}, {"actions", o.actions}, {"mismatches", o.mismatches}});
      j["stories"] = {{"empty", s.empty},
                      {"stories", s.stories},
                      {"passed", s.passed},
                      {"actions", s.actions},
                      {"correct_actions", s.correct_actions},
                      {"story_accuracy", s.story_accuracy},
                      {"action_accuracy", s.action_accuracy},
                      {"matrix", matrix_json(s.matrix)},
                      {"outcomes", outcomes}};
    }
    if (r.ksweep) {
      json rows = json::array();
      for (const auto& k : r.ksweep->rows) rows.push_back({{"k", k.k}, {"accuracy", k.accuracy}});
      j["ksweep"] = {{"rows", rows}, {"best_k", r.ksweep->best_k}, {"eval_size", r.ksweep->eval_size}};
    }
    return j.dump(2) + "\n";
  }

  if (format == ReportFormat::kCsv) {
    std::ostringstream out;
    out << "section,row,column,value\n";
    auto row = [&](const std::string& section, const std::string& r1, const std::string& c, const std::string& v) {
      out << csv_field(section) << ',' << csv_field(r1) << ',' << csv_field(c) << ',' << csv_field(v) << '\n';
    };
    auto matrix = [&](const std::string& section, const ConfusionMatrix& m) {
      for (std::size_t i = 0; i < m.labels.size(); ++i)
        for (std::size_t k = 0; k < m.labels.size(); ++k) row(section, m.labels[i], m.labels[k], std::to_string(m.counts[i][k]));
    };
    if (r.intents) {
      row("intents", "summary", "kernel", r.intents->kernel);
      row("intents", "summary", "C", num(r.intents->C));
      row("intents", "summary", "folds", std::to_string(r.intents->folds));
      row("intents", "summary", "accuracy", num(r.intents->accuracy));
      matrix("intent_confusion", r.intents->matrix);
    }
    if (r.kernels)
      for (const auto& k : *r.kernels) {
        row("kernels", k.kernel, "best_C", num(k.best_C));
        row("kernels", k.kernel, "accuracy", num(k.accuracy));
      }
    if (r.confidences)
      for (std::size_t b = 0; b < ConfidenceHistogram::kBins; ++b) {
        const std::string label = fmt(0.05 * static_cast<double>(b)) + "-" + fmt(0.05 * static_cast<double>(b + 1));
        row("confidences", label, "correct", std::to_string(r.confidences->correct[b]));
        row("confidences", label, "incorrect", std::to_string(r.confidences->incorrect[b]));
      }
    if (r.entities) {
      const auto& s = r.entities->scores;
      row("entities", "summary", "folds", std::to_string(r.entities->folds));
      row("entities", "summary", "token_accuracy", num(s.token_accuracy));
      row("entities", "summary", "precision", num(s.precision));
      row("entities", "summary", "recall", num(s.recall));
      row("entities", "summary", "f1", num(s.f1));
    }
    if (r.stories) {
      const auto& s = *r.stories;
      if (s.empty) {
        row("stories", "summary", "empty", "true");
      } else {
        row("stories", "summary", "story_accuracy", num(s.story_accuracy));
        row("stories", "summary", "action_accuracy", num(s.action_accuracy));
        for (const auto& o : s.outcomes) row("stories", o.name, "passed", o.passed ? "true" : "false");
        matrix("action_confusion", s.matrix);
      }
    }
    if (r.ksweep)
      for (const auto& k : r.ksweep->rows) row("ksweep", std::to_string(k.k), "accuracy", num(k.accuracy));
    return out.str();
  }

  std::ostringstream out;
  if (r.intents) {
    out << "== Intent classification (" << r.intents->folds << "-fold stratified CV, kernel " << r.intents->kernel
        << ", C = " << num(r.intents->C) << ")\n";
    out << "accuracy: " << fmt(r.intents->accuracy) << "% (" << r.intents->matrix.trace() << "/"
        << r.intents->matrix.total() << ")\n";
    matrix_text(out, r.intents->matrix);
    out << '\n';
  }
  if (r.kernels) {
    out << "== Kernel comparison\n" << pad_right("kernel", 10) << pad_left("best C", 8) << pad_left("accuracy", 10) << '\n';
    for (const auto& k : *r.kernels)
      out << pad_right(k.kernel, 10) << pad_left(num(k.best_C), 8) << pad_left(fmt(k.accuracy), 10) << '\n';
    out << '\n';
  }
  if (r.confidences) {
    out << "== Intent confidence distribution\n" << pad_right("bin", 12) << pad_left("correct", 9)
        << pad_left("incorrect", 11) << '\n';
    for (std::size_t b = 0; b < ConfidenceHistogram::kBins; ++b)
      out << pad_right(fmt(0.05 * static_cast<double>(b)) + "-" + fmt(0.05 * static_cast<double>(b + 1)), 12)
          << pad_left(std::to_string(r.confidences->correct[b]), 9)
          << pad_left(std::to_string(r.confidences->incorrect[b]), 11) << '\n';
    out << '\n';
  }
  if (r.entities) {
    const auto& s = r.entities->scores;
    out << "== Entity extraction (" << r.entities->folds << "-fold CV)\n";
    out << "token accuracy: " << fmt(s.token_accuracy) << "% (" << s.correct_tokens << "/" << s.tokens << ")\n";
    out << "entity precision: " << fmt(s.precision) << "%  recall: " << fmt(s.recall) << "%  F1: " << fmt(s.f1)
        << "%\n\n";
  }
  if (r.stories) {
    const auto& s = *r.stories;
    out << "== Stories\n";
    if (s.empty) {
      out << "no stories: accuracies undefined\n\n";
    } else {
      out << "story accuracy: " << fmt(s.story_accuracy) << "% (" << s.passed << "/" << s.stories << ")\n";
      out << "action accuracy: " << fmt(s.action_accuracy) << "% (" << s.correct_actions << "/" << s.actions << ")\n";
      for (const auto& o : s.outcomes)
        out << "  " << (o.passed ? "PASS " : "FAIL ") << o.name << " (" << o.mismatches << " of " << o.actions
            << " actions wrong)\n";
      matrix_text(out, s.matrix);
      out << '\n';
    }
  }
  if (r.ksweep) {
    out << "== Entity normalization k-sweep (" << r.ksweep->eval_size << " corrupted surfaces)\n"
        << pad_right("k", 6) << pad_left("accuracy", 10) << '\n';
    for (const auto& k : r.ksweep->rows)
      out << pad_right(std::to_string(k.k), 6) << pad_left(fmt(k.accuracy), 10) << '\n';
    out << "best k: " << r.ksweep->best_k << "\n\n";
  }
  return out.str();
}

EvalReport parse_report_json(std::string_view text) {
  EvalReport r;
  try {
    const auto j = json::parse(text);
    if (j.contains("intents")) {
      const auto& s = j.at("intents");
      r.intents = IntentSection{s.at("kernel").get<std::string>(), s.at("C").get<double>(),
                                s.at("folds").get<std::size_t>(), s.at("accuracy").get<double>(),
                                matrix_from(s.at("matrix"))};
    }
    if (j.contains("kernels")) {
      r.kernels.emplace();
      for (const auto& k : j.at("kernels"))
        r.kernels->push_back({k.at("kernel").get<std::string>(), k.at("best_C").get<double>(), k.at("accuracy").get<double>()});
    }
    if (j.contains("confidences")) {
      r.confidences.emplace();
      const auto& bins = j.at("confidences").at("bins");
      if (bins.size() != ConfidenceHistogram::kBins) throw Error("confidence histogram must have 20 bins");
      for (std::size_t b = 0; b < ConfidenceHistogram::kBins; ++b) {
        r.confidences->correct[b] = bins[b].at("correct").get<std::size_t>();
        r.confidences->incorrect[b] = bins[b].at("incorrect").get<std::size_t>();
      }
    }
    if (j.contains("entities")) {
      const auto& s = j.at("entities");
      EntitySection e;
      e.folds = s.at("folds").get<std::size_t>();
      e.scores.tokens = s.at("tokens").get<std::size_t>();
      e.scores.correct_tokens = s.at("correct_tokens").get<std::size_t>();
      e.scores.gold_entities = s.at("gold_entities").get<std::size_t>();
      e.scores.predicted_entities = s.at("predicted_entities").get<std::size_t>();
      e.scores.matched_entities = s.at("matched_entities").get<std::size_t>();
      e.scores.token_accuracy = s.at("token_accuracy").get<double>();
      e.scores.precision = s.at("precision").get<double>();
      e.scores.recall = s.at("recall").get<double>();
      e.scores.f1 = s.at("f1").get<double>();
      r.entities = e;
    }
    if (j.contains("stories")) {
      const auto& s = j.at("stories");
      StoryEval e;
      e.empty = s.at("empty").get<bool>();
      e.stories = s.at("stories").get<std::size_t>();
      e.passed = s.at("passed").get<std::size_t>();
      e.actions = s.at("actions").get<std::size_t>();
      e.correct_actions = s.at("correct_actions").get<std::size_t>();
      e.story_accuracy = s.at("story_accuracy").get<double>();
      e.action_accuracy = s.at("action_accuracy").get<double>();
      e.matrix = matrix_from(s.at("matrix"));
      for (const auto& o : s.at("outcomes"))
        e.outcomes.push_back({o.at("name").get<std::string>(), o.at("passed").get<bool>(),
                              o.at("actions").get<std::size_t>(), o.at("mismatches").get<std::size_t>()});
      r.stories = e;
    }
    if (j.contains("ksweep")) {
      const auto& s = j.at("ksweep");
      KSweepSection k;
      for (const auto& row : s.at("rows")) k.rows.push_back({row.at("k").get<std::size_t>(), row.at("accuracy").get<double>()});
      k.best_k = s.at("best_k").get<std::size_t>();
      k.eval_size = s.at("eval_size").get<std::size_t>();
      r.ksweep = k;
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return r;
}

}  // namespace cbot
