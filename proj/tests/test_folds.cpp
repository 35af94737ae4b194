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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cbot/folds.hpp"
#include "cbot/util.hpp"

using namespace cbot;

namespace {

// Disjoint, exhaustive, ascending, and per-class counts within one of n_c/k.
void check_invariants(const std::vector<std::string>& labels, const FoldSplit& split, std::size_t k) {
  REQUIRE(split.size() == k);
  std::vector<int> seen(labels.size(), 0);
  for (const auto& fold : split.folds) {
    CHECK(std::is_sorted(fold.begin(), fold.end()));
    for (std::size_t i : fold) {
      REQUIRE(i < labels.size());
      ++seen[i];
    }
  }
  for (int s : seen) CHECK(s == 1);

  std::map<std::string, std::size_t> totals;
  for (const auto& l : labels) ++totals[l];
  for (const auto& fold : split.folds) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i : fold) ++counts[labels[i]];
    for (const auto& [label, n] : totals) {
      const double expected = static_cast<double>(n) / static_cast<double>(k);
      CHECK(std::abs(static_cast<double>(counts[label]) - expected) < 1.0 + 1e-12);
    }
  }
}

}  // namespace

TEST_CASE("balanced classes divide exactly") {
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) {
    labels.push_back("a");
    labels.push_back("b");
  }
  const auto split = stratified_kfold(labels, 10, 3);
  for (const auto& fold : split.folds) {
    REQUIRE(fold.size() == 2);
    CHECK(labels[fold[0]] != labels[fold[1]]);
  }
}

TEST_CASE("a single fold holds everything") {
  const std::vector<std::string> labels{"a", "b", "a"};
  const auto split = stratified_kfold(labels, 1, 0);
  REQUIRE(split.size() == 1);
  CHECK(split.folds[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(split.train_indices(0).empty());
}

TEST_CASE("nineteen classes over 441 examples") {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 441; ++i) labels.push_back("intent" + std::to_string(i % 19));
  check_invariants(labels, stratified_kfold(labels, 10, 42), 10);
}

TEST_CASE("random label multisets keep the invariants") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 1 + rng.index(8);
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t n = 10 + rng.index(40);
      for (std::size_t i = 0; i < n; ++i) labels.push_back("c" + std::to_string(c));
    }
    rng.shuffle(labels);
    check_invariants(labels, stratified_kfold(labels, 10, rng.next()), 10);
  }
}

TEST_CASE("train indices complement the fold") {
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3 ? "x" : "y");
  const auto split = stratified_kfold(labels, 5, 1);
  for (std::size_t k = 0; k < 5; ++k) {
    auto train = split.train_indices(k);
    CHECK(std::is_sorted(train.begin(), train.end()));
    std::set<std::size_t> all(train.begin(), train.end());
    for (std::size_t i : split.folds[k]) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
  }
}

TEST_CASE("splitting is deterministic and rejects tiny classes") {
  std::vector<std::string> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 4 ? "x" : "y");
  CHECK(stratified_kfold(labels, 10, 5).folds == stratified_kfold(labels, 10, 5).folds);
  CHECK_THROWS(stratified_kfold(std::vector<std::string>{"a", "a", "b"}, 3, 0));
}
