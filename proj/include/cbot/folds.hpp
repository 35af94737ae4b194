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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cbot {

struct FoldSplit {
  // Each fold lists example indices in ascending order.
  std::vector<std::vector<std::size_t>> folds;

  std::size_t size() const { return folds.size(); }
  // Every index outside fold `k`, ascending. Empty for a single fold.
  std::vector<std::size_t> train_indices(std::size_t k) const;
};

// Per class (in label order) the member indices are shuffled with the seed
// and dealt round-robin into the folds, the dealing position carrying over
// between classes. Throws Error when a class has fewer than k members.
FoldSplit stratified_kfold(std::span<const std::string> labels, std::size_t k, std::uint64_t seed);

}  // namespace cbot
