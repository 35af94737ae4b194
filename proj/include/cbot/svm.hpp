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
#include <string_view>
#include <utility>
#include <vector>

#include "cbot/text.hpp"

// Multiclass kernel SVM for intent classification: one-vs-one binary
// machines trained by SMO with maximal-violating-pair selection.
namespace cbot::svm {

enum class KernelKind { kLinear, kPoly, kSigmoid, kRbf };

std::string kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  double gamma = 1.0;  // poly, sigmoid, rbf
  int degree = 3;      // poly
  double coef0 = 0.0;  // poly, sigmoid

  // gamma = 1/dimension, degree 3, coef0 0.
  static KernelSpec with_defaults(KernelKind kind, std::size_t dimension);

  void validate() const;
  double operator()(std::span<const double> a, std::span<const double> b) const;

  bool operator==(const KernelSpec&) const = default;
};

struct LabeledVector {
  Vector x;
  std::string label;
};

struct BinaryMachine {
  std::size_t positive = 0;  // class index voted for when decision > 0
  std::size_t negative = 0;
  std::vector<Vector> support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  std::vector<std::size_t> support_indices;  // positions in the training data
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  bool operator==(const BinaryMachine&) const = default;
};

struct SvmModel {
  std::vector<std::string> classes;  // sorted
  KernelSpec kernel;
  double C = 1.0;
  std::size_t dimension = 0;
  std::vector<BinaryMachine> machines;  // pairs (a, b), a < b, row-major

  bool operator==(const SvmModel&) const = default;
};

struct SvmParams {
  double tolerance = 1e-3;
  // Iteration cap per machine = iteration_factor * examples in the machine.
  std::size_t iteration_factor = 60;
};

struct IntentPrediction {
  std::vector<std::pair<std::string, double>> ranking;  // descending confidence

  const std::string& top() const { return ranking.front().first; }
  double top_confidence() const { return ranking.front().second; }
};

// Machines train in parallel (OpenMP); each machine is independent so the
// result matches reference::train_svm exactly.
SvmModel train_svm(std::span<const LabeledVector> data, const KernelSpec& kernel, double C,
                   const SvmParams& params = {});

namespace reference {
SvmModel train_svm(std::span<const LabeledVector> data, const KernelSpec& kernel, double C,
                   const SvmParams& params = {});
}  // namespace reference

double decision_value(const BinaryMachine& machine, const KernelSpec& kernel, std::span<const double> x);

// Score per class = votes + logistic(sum of margins toward the class)/|classes|;
// confidence = softmax over scores. A decision within 1e-9 of zero splits its vote.
IntentPrediction predict_intent(const SvmModel& model, std::span<const double> x);

// Largest KKT violation over all machines, measured on the training data
// the model was fit to.
double max_kkt_violation(const SvmModel& model, std::span<const LabeledVector> data);

struct GridRow {
  double C;
  double accuracy;  // mean fold accuracy, percent
};

struct GridSearchResult {
  double best_C;
  double best_accuracy;
  std::vector<GridRow> table;
};

inline const std::vector<double> kDefaultCGrid = {1, 2, 5, 10, 20, 100};

// Stratified k-fold accuracy per C. Ties go to the smaller C.
GridSearchResult grid_search_C(std::span<const LabeledVector> data, const KernelSpec& kernel,
                               const std::vector<double>& grid = kDefaultCGrid, std::size_t folds = 5,
                               std::uint64_t seed = 0, const SvmParams& params = {});

struct KernelRow {
  std::string kernel;
  double best_C;
  double accuracy;

  bool operator==(const KernelRow&) const = default;
};

std::vector<KernelRow> kernel_sweep(std::span<const LabeledVector> data, const std::vector<KernelSpec>& kernels,
                                    const std::vector<double>& grid = kDefaultCGrid, std::size_t folds = 5,
                                    std::uint64_t seed = 0, const SvmParams& params = {});

}  // namespace cbot::svm
