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

#include <cmath>
#include <limits>

#include "cbot/corpus.hpp"
#include "cbot/crf.hpp"
#include "cbot/util.hpp"
#include "crf_oracle.hpp"
#include "support.hpp"

using namespace cbot;
using namespace cbot::crf;

using namespace cbot::testing;

TEST_CASE("log partition of small cases") {
  CrfModel two({"O", "U-x"}, {"f"});
  const std::vector<FeatureVector> one{{{"f", 1.0}}};
  CHECK(log_partition(two, one) == doctest::Approx(std::log(2.0)));

  CrfModel zero({"O", "B-x", "L-x"}, {"f"});
  const std::vector<FeatureVector> five(5, FeatureVector{{"f", 1.0}});
  CHECK(log_partition(zero, five) == doctest::Approx(5 * std::log(3.0)));
  CHECK(log_sum_exp(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("log partition matches enumeration over 81 paths") {
  Rng rng(81);
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = random_instance(rng, 4, 3);
    CHECK(std::abs(log_partition(inst.model, inst.features) - oracle_log_z(inst.model, inst.features)) < 1e-8);
  }
}

TEST_CASE("viterbi matches enumeration on random models") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(rng, 1 + rng.index(6), 2 + rng.index(3));
    const auto v = viterbi(inst.model, inst.features);
    const auto best = oracle_argmax(inst.model, inst.features);
    CHECK(v.path == best);
    CHECK(v.score == doctest::Approx(oracle_score(inst.model, inst.features, best)));
    CHECK(path_score(inst.model, inst.features, v.path) == doctest::Approx(v.score));
  }
}

TEST_CASE("viterbi follows dominant emissions") {
  CrfModel m({"O", "B-x", "L-x"}, {"a", "b", "c"});
  m.emission(0, 1) = 5;
  m.emission(1, 2) = 5;
  m.emission(2, 0) = 5;
  const std::vector<FeatureVector> feats{{{"a", 1}}, {{"b", 1}}, {{"c", 1}}};
  CHECK(viterbi(m, feats).path == std::vector<std::size_t>{1, 2, 0});
  CHECK(viterbi(m, std::vector<FeatureVector>{}).path.empty());
}

TEST_CASE("viterbi breaks ties lexicographically") {
  CrfModel m({"O", "B-x", "U-x"}, {"p", "q"});
  m.emission(0, 1) = 2;
  m.emission(0, 2) = 2;
  m.emission(1, 0) = 1;
  const std::vector<FeatureVector> feats{{{"p", 1}}, {{"q", 1}}};
  const std::vector<std::size_t> first{1, 0}, second{2, 0};
  REQUIRE(oracle_score(m, feats, first) == oracle_score(m, feats, second));
  REQUIRE(oracle_argmax(m, feats) == first);
  CHECK(viterbi(m, feats).path == first);

  CrfModel flat({"O", "U-x"}, {"p"});
  CHECK(viterbi(flat, std::vector<FeatureVector>(3, FeatureVector{{"p", 1}})).path ==
        std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("marginals are normalized") {
  Rng rng(12);
  const auto inst = random_instance(rng, 5, 4);
  const auto mg = forward_backward(inst.model, inst.features);
  CHECK(mg.log_z == doctest::Approx(oracle_log_z(inst.model, inst.features)));
  for (std::size_t t = 0; t < mg.length; ++t) {
    double s = 0;
    for (std::size_t y = 0; y < mg.labels; ++y) s += mg.node[t * mg.labels + y];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t t = 0; t + 1 < mg.length; ++t) {
    double s = 0;
    for (std::size_t k = 0; k < mg.labels * mg.labels; ++k) s += mg.edge[t * mg.labels * mg.labels + k];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences") {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    auto inst = random_instance(rng, 4, 3);
    std::vector<TaggedSequence> batch{random_tagged(rng, inst.model, inst.features)};
    auto second = random_instance(rng, 3, 3);
    batch.push_back(random_tagged(rng, inst.model, second.features));
    const auto g = crf_gradient(inst.model, batch);
    CHECK(g.log_likelihood == doctest::Approx(log_likelihood(inst.model, batch)));
    const double h = 1e-5;
    auto check_block = [&](std::vector<double>& w, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double saved = w[i];
        w[i] = saved + h;
        const double up = log_likelihood(inst.model, batch);
        w[i] = saved - h;
        const double down = log_likelihood(inst.model, batch);
        w[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-4});
        CHECK(std::abs(numeric - analytic[i]) / denom < 1e-4);
      }
    };
    check_block(inst.model.emission_weights(), g.emission);
    check_block(inst.model.transition_weights(), g.transition);
  }
}

TEST_CASE("gradient vanishes at an interior optimum") {
  CrfModel m({"O", "U-x"}, {"f"});
  std::vector<TaggedSequence> batch{{{{{"f", 1.0}}}, {BilouTag::outside()}},
                                    {{{{"f", 1.0}}}, {BilouTag::parse("U-x")}}};
  const auto g = crf_gradient(m, batch);
  double norm = 0;
  for (double x : g.emission) norm += x * x;
  for (double x : g.transition) norm += x * x;
  CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("duplicating a sequence doubles the gradient") {
  Rng rng(77);
  const auto inst = random_instance(rng, 4, 3);
  const std::vector<TaggedSequence> one{random_tagged(rng, inst.model, inst.features)};
  const std::vector<TaggedSequence> two{one[0], one[0]};
  const auto g1 = crf_gradient(inst.model, one);
  const auto g2 = crf_gradient(inst.model, two);
  for (std::size_t i = 0; i < g1.emission.size(); ++i) CHECK(g2.emission[i] == 2 * g1.emission[i]);
  for (std::size_t i = 0; i < g1.transition.size(); ++i) CHECK(g2.transition[i] == 2 * g1.transition[i]);
  CHECK(g2.log_likelihood == 2 * g1.log_likelihood);
}

TEST_CASE("parallel gradient equals the serial reference bit for bit") {
  Rng rng(5);
  const auto inst = random_instance(rng, 5, 4);
  std::vector<TaggedSequence> batch;
  for (int i = 0; i < 20; ++i) batch.push_back(random_tagged(rng, inst.model, random_instance(rng, 1 + rng.index(6), 4).features));
  const auto a = crf_gradient(inst.model, batch);
  const auto b = reference::crf_gradient(inst.model, batch);
  CHECK(a.emission == b.emission);
  CHECK(a.transition == b.transition);
  CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("a single observation is fit with weak regularization") {
  const std::vector<TaggedSequence> seqs{{{{{"w", 1.0}}}, {BilouTag::parse("U-x")}}};
  const auto result = train_crf(seqs, CrfHyper{1e-3, 1e-3, 200, 0.1});
  const auto& m = result.model;
  REQUIRE(m.num_labels() == 2);
  const auto mg = forward_backward(m, seqs[0].features);
  CHECK(mg.node[static_cast<std::size_t>(m.label_index("U-x"))] > 0.99);
}

TEST_CASE("defaults and hyperparameters are carried by the model") {
  const CrfHyper d;
  CHECK(d.l1 == 0.1);
  CHECK(d.l2 == 0.1);
  CHECK(d.max_iterations == 50);
  const std::vector<TaggedSequence> seqs{{{{{"w", 1.0}}}, {BilouTag::parse("U-x")}}};
  CHECK(train_crf(seqs).model.hyper() == d);
}

TEST_CASE("accepted steps never lower the objective") {
  Rng rng(31);
  const auto proto = random_instance(rng, 3, 4, 6);
  std::vector<TaggedSequence> batch;
  for (int i = 0; i < 15; ++i)
    batch.push_back(random_tagged(rng, proto.model, random_instance(rng, 2 + rng.index(4), 4, 6).features));
  const auto result = train_crf(batch, CrfHyper{0.05, 0.05, 60, 0.1});
  REQUIRE(result.objective_trace.size() >= 2);
  for (std::size_t t = 1; t < result.objective_trace.size(); ++t)
    CHECK(result.objective_trace[t] >= result.objective_trace[t - 1] - 1e-12);
  CHECK(objective(result.model, batch) == doctest::Approx(result.objective_trace.back()));
}

TEST_CASE("stronger l1 gives sparser weights") {
  const auto intents = parse_nlu(read_file(testing::data_dir() / "nlu.md"));
  const auto seqs = entity_sequences(intents, false);
  const auto weak = train_crf(seqs, CrfHyper{0.01, 0.1, 30, 0.1});
  const auto strong = train_crf(seqs, CrfHyper{1.0, 0.1, 30, 0.1});
  CHECK(strong.model.nonzero_weights() < weak.model.nonzero_weights());
}

TEST_CASE("extraction finds the multi-token entity") {
  const auto intents = parse_nlu(read_file(testing::data_dir() / "nlu.md"));
  std::vector<IntentDef> definition;
  for (const auto& i : intents)
    if (i.name == "dinhNghia") definition.push_back(i);
  REQUIRE(definition.size() == 1);
  const auto seqs = entity_sequences(definition, false);
  const auto model = train_crf(seqs).model;
  const std::string text = "học phần tiên quyết là gì";
  const auto tokens = tokenize(text);
  const auto spans = extract_entities(model, text, tokens);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].value == "học phần tiên quyết");
  CHECK(spans[0].entity_name == "dn");
  CHECK(extract_entities(model, "", {}).empty());
}

TEST_CASE("make_sequence pairs features with BILOU tags") {
  const auto seq = make_sequence(parse_annotated("[học phần](dn) là gì"));
  REQUIRE(seq.tags.size() == 4);
  CHECK(seq.features.size() == 4);
  CHECK(seq.tags[0].str() == "B-dn");
  CHECK(seq.tags[1].str() == "L-dn");
  CHECK(seq.features[0].count("word=học"));
}
