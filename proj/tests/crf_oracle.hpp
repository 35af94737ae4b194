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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cbot/crf.hpp"
#include "cbot/util.hpp"

// Exhaustive path enumeration for small CRF instances.
namespace cbot::testing {

struct Instance {
  crf::CrfModel model;
  std::vector<FeatureVector> features;
};

// Random dense model over features f0..f{F-1} with real-valued inputs.
inline Instance random_instance(Rng& rng, std::size_t T, std::size_t L, std::size_t F = 4) {
  static const char* kLabels[] = {"O", "B-x", "I-x", "L-x", "U-x"};
  std::vector<std::string> labels(kLabels, kLabels + L);
  std::vector<std::string> names;
  for (std::size_t f = 0; f < F; ++f) names.push_back("f" + std::to_string(f));
  Instance inst{crf::CrfModel(labels, names), {}};
  for (auto& w : inst.model.emission_weights()) w = rng.uniform(-2, 2);
  for (auto& w : inst.model.transition_weights()) w = rng.uniform(-2, 2);
  for (std::size_t t = 0; t < T; ++t) {
    FeatureVector fv;
    for (std::size_t f = 0; f < F; ++f)
      if (rng.uniform() < 0.7) fv[names[f]] = rng.uniform(0.1, 1.5);
    fv["unseen"] = 1.0;
    inst.features.push_back(fv);
  }
  return inst;
}

inline double oracle_score(const crf::CrfModel& m, const std::vector<FeatureVector>& feats, const std::vector<std::size_t>& path) {
  double s = 0;
  for (std::size_t t = 0; t < feats.size(); ++t) {
    for (const auto& [name, x] : feats[t]) {
      const int f = m.feature_index(name);
      if (f >= 0) s += x * m.emission(static_cast<std::size_t>(f), path[t]);
    }
    if (t > 0) s += m.transition(path[t - 1], path[t]);
  }
  return s;
}

template <typename Fn>
void for_each_path(std::size_t T, std::size_t L, Fn fn) {
  std::vector<std::size_t> path(T, 0);
  while (true) {
    fn(path);
    std::size_t t = T;
    while (t > 0) {
      if (++path[t - 1] < L) break;
      path[t - 1] = 0;
      --t;
    }
    if (t == 0) return;
  }
}

inline double oracle_log_z(const crf::CrfModel& m, const std::vector<FeatureVector>& feats) {
  std::vector<double> scores;
  for_each_path(feats.size(), m.num_labels(), [&](const auto& p) { scores.push_back(oracle_score(m, feats, p)); });
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0;
  for (double s : scores) sum += std::exp(s - mx);
  return mx + std::log(sum);
}

// Maximum score; ties keep the first path in lexicographic order.
inline std::vector<std::size_t> oracle_argmax(const crf::CrfModel& m, const std::vector<FeatureVector>& feats) {
  std::vector<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for_each_path(feats.size(), m.num_labels(), [&](const auto& p) {
    const double s = oracle_score(m, feats, p);
    if (s > best_score) {
      best_score = s;
      best = p;
    }
  });
  return best;
}

inline crf::TaggedSequence random_tagged(Rng& rng, const crf::CrfModel& m, std::vector<FeatureVector> feats) {
  crf::TaggedSequence s{std::move(feats), {}};
  for (std::size_t t = 0; t < s.features.size(); ++t)
    s.tags.push_back(BilouTag::parse(m.labels()[rng.index(m.num_labels())]));
  return s;
}

}  // namespace cbot::testing
