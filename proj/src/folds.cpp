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

#include "cbot/folds.hpp"

#include <algorithm>
#include <map>

#include "cbot/error.hpp"
#include "cbot/util.hpp"

namespace cbot {

std::vector<std::size_t> FoldSplit::train_indices(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != k) out.insert(out.end(), folds[f].begin(), folds[f].end());
  std::sort(out.begin(), out.end());
  return out;
}

FoldSplit stratified_kfold(std::span<const std::string> labels, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error("number of folds must be positive");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class)
    if (members.size() < k)
      throw Error("class '" + label + "' has " + std::to_string(members.size()) + " examples, fewer than " +
                  std::to_string(k) + " folds; use at most " + std::to_string(members.size()) + " folds");

  FoldSplit split;
  split.folds.resize(k);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(members);
    for (std::size_t idx : members) {
      split.folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& fold : split.folds) std::sort(fold.begin(), fold.end());
  return split;
}

}  // namespace cbot
