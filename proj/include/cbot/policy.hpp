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

#include "cbot/corpus.hpp"
#include "cbot/tracker.hpp"

// Next-action policy: binary tracker states fed through a single-layer
// LSTM, softmax over actions.
namespace cbot::policy {

// Blocks: intent one-hot | entities present | slots set | previous action one-hot.
using StateVector = std::vector<std::uint8_t>;

std::size_t state_size(const DomainSpec& domain);

// Throws ModelError on an intent, entity, slot or action outside the domain.
StateVector featurize_tracker(const ConversationTracker& tracker, const DomainSpec& domain);

// States observed before each executed action since the last restart,
// followed by the current state.
std::vector<StateVector> state_history(const ConversationTracker& tracker, const DomainSpec& domain);

// Last `max_history` entries of the history, left-padded with zero states.
std::vector<StateVector> state_window(const ConversationTracker& tracker, const DomainSpec& domain,
                                      std::size_t max_history);

struct PolicyExample {
  std::vector<StateVector> window;  // exactly max_history states
  std::size_t target = 0;           // action index
};

// Applies a story's user turn to a tracker (intent plus entity/slot assignments).
void apply_user_turn(ConversationTracker& tracker, const UserTurn& turn);

// One example per bot action, plus the implicit action_listen that closes
// every user turn.
std::vector<PolicyExample> stories_to_sequences(const std::vector<Story>& stories, const DomainSpec& domain,
                                                std::size_t max_history = 5);

struct PolicyConfig {
  std::size_t hidden = 32;
  std::size_t max_history = 5;
  std::size_t epochs = 500;
  double learning_rate = 0.05;
  double clip_norm = 5.0;
  // Training stops early once accuracy is 100% and mean loss is below this.
  double target_loss = 0.01;
  std::uint64_t seed = 0;

  bool operator==(const PolicyConfig&) const = default;
};

// Parameter layout (flat): W (4H x N), U (4H x H), b (4H), V (A x H), c (A).
// Gate order inside each 4H block: input, forget, output, candidate.
struct PolicyModel {
  std::size_t input_size = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  std::size_t max_history = 5;
  std::uint64_t domain_fingerprint = 0;
  std::vector<double> params;

  static PolicyModel random(std::size_t input_size, std::size_t hidden, std::size_t outputs,
                            std::size_t max_history, std::uint64_t seed);

  std::size_t param_count() const;

  bool operator==(const PolicyModel&) const = default;
};

struct EpochStats {
  double loss;      // mean cross-entropy
  double accuracy;  // percent

  bool operator==(const EpochStats&) const = default;
};

struct TrainingTrace {
  double initial_loss = 0.0;
  std::vector<EpochStats> epochs;
};

struct PolicyTrainResult {
  PolicyModel model;
  TrainingTrace trace;
};

// Full-batch Adam with gradient-norm clipping; a step that raises the loss
// is undone and the learning rate halved.
PolicyTrainResult train_policy(std::span<const PolicyExample> examples, const DomainSpec& domain,
                               const PolicyConfig& config = {});

// Distribution over actions; shorter histories are left-padded.
std::vector<double> predict_action(const PolicyModel& model, std::span<const StateVector> states);

struct LossGradient {
  double loss = 0.0;  // summed cross-entropy
  std::vector<double> gradient;
};

LossGradient loss_and_gradient(const PolicyModel& model, std::span<const PolicyExample> batch);
double loss(const PolicyModel& model, std::span<const PolicyExample> batch);
double accuracy(const PolicyModel& model, std::span<const PolicyExample> batch);

// Largest relative difference between BPTT and central differences (step h):
// |a - n| / max(|a|, |n|, 1e-4).
double policy_gradient_check(const PolicyModel& model, std::span<const PolicyExample> batch, double h = 1e-5);

}  // namespace cbot::policy
