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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cbot/text.hpp"

// First-order linear-chain CRF over BILOU tags.
//
// Scores are sums of emission weights w[f, y] * x_f over a token's features
// plus transition weights t[y_prev, y]. There are no start or stop weights.
// All dynamic programming runs in log space.
namespace cbot::crf {

struct CrfHyper {
  double l1 = 0.1;
  double l2 = 0.1;
  std::size_t max_iterations = 50;
  double initial_step = 0.1;

  bool operator==(const CrfHyper&) const = default;
};

struct TaggedSequence {
  std::vector<FeatureVector> features;
  std::vector<BilouTag> tags;
};

class CrfModel {
 public:
  CrfModel() = default;
  // Weights start at zero.
  CrfModel(std::vector<std::string> labels, std::vector<std::string> features, CrfHyper hyper = {});

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& features() const { return features_; }
  std::size_t num_labels() const { return labels_.size(); }
  std::size_t num_features() const { return features_.size(); }
  const CrfHyper& hyper() const { return hyper_; }

  // -1 when unknown.
  int label_index(std::string_view label) const;
  int feature_index(std::string_view feature) const;

  double& emission(std::size_t feature, std::size_t label) { return emission_[feature * labels_.size() + label]; }
  double emission(std::size_t feature, std::size_t label) const {
    return emission_[feature * labels_.size() + label];
  }
  double& transition(std::size_t from, std::size_t to) { return transition_[from * labels_.size() + to]; }
  double transition(std::size_t from, std::size_t to) const { return transition_[from * labels_.size() + to]; }

  // Flat views: emission (features x labels) followed by transition (labels x labels).
  std::vector<double>& emission_weights() { return emission_; }
  const std::vector<double>& emission_weights() const { return emission_; }
  std::vector<double>& transition_weights() { return transition_; }
  const std::vector<double>& transition_weights() const { return transition_; }

  std::size_t nonzero_weights() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::size_t> label_index_;
  std::unordered_map<std::string, std::size_t> feature_index_;
  std::vector<double> emission_;
  std::vector<double> transition_;
  CrfHyper hyper_;
};

// Per-position emission scores, T x L row-major. Unknown features are ignored.
struct Lattice {
  std::size_t length = 0;
  std::size_t labels = 0;
  std::vector<double> emit;

  double at(std::size_t t, std::size_t y) const { return emit[t * labels + y]; }
};

Lattice score_lattice(const CrfModel& model, std::span<const FeatureVector> features);

double log_sum_exp(std::span<const double> v);

double log_partition(const CrfModel& model, std::span<const FeatureVector> features);

struct ViterbiResult {
  std::vector<std::size_t> path;  // label indices
  double score = 0.0;
};

// Highest-scoring path; among tied paths the lexicographically smallest
// sequence of label indices.
ViterbiResult viterbi(const CrfModel& model, std::span<const FeatureVector> features);

// Unnormalized score of a given label path.
double path_score(const CrfModel& model, std::span<const FeatureVector> features,
                  std::span<const std::size_t> path);

struct Marginals {
  std::size_t length = 0;
  std::size_t labels = 0;
  double log_z = 0.0;
  std::vector<double> node;  // T x L
  std::vector<double> edge;  // (T-1) x L x L
};

Marginals forward_backward(const CrfModel& model, std::span<const FeatureVector> features);

// Gradient of the unregularized log-likelihood, shaped like the model.
struct CrfGradient {
  double log_likelihood = 0.0;
  std::vector<double> emission;
  std::vector<double> transition;
};

// Sequences are processed in parallel; per-sequence gradients are summed
// in sequence order, so the result is bit-identical to the reference.
CrfGradient crf_gradient(const CrfModel& model, std::span<const TaggedSequence> batch);

double log_likelihood(const CrfModel& model, std::span<const TaggedSequence> batch);

namespace reference {
CrfGradient crf_gradient(const CrfModel& model, std::span<const TaggedSequence> batch);
}  // namespace reference

struct CrfTrainResult {
  CrfModel model;
  // Objective (log-likelihood minus penalties) at initialization and after
  // every accepted step.
  std::vector<double> objective_trace;
};

// Proximal gradient ascent with backtracking; weights start at zero.
CrfTrainResult train_crf(std::span<const TaggedSequence> sequences, const CrfHyper& hyper = {});

double objective(const CrfModel& model, std::span<const TaggedSequence> batch);

std::vector<BilouTag> predict_tags(const CrfModel& model, std::span<const Token> tokens);

// Viterbi tags decoded into spans whose values are slices of `text`.
std::vector<EntitySpan> extract_entities(const CrfModel& model, std::string_view text,
                                         std::span<const Token> tokens);

TaggedSequence make_sequence(const AnnotatedUtterance& utt);

}  // namespace cbot::crf
