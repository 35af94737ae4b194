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

#include "cbot/svm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cbot/error.hpp"
#include "cbot/folds.hpp"

namespace cbot::svm {
namespace {

constexpr double kTau = 1e-12;
constexpr double kTieBand = 1e-9;

struct Problem {
  std::vector<std::string> classes;
  std::vector<std::size_t> class_of;  // per example
  std::size_t dimension = 0;
};

Problem prepare(std::span<const LabeledVector> data) {
  if (data.empty()) throw TrainingError("no training data");
  Problem p;
  p.dimension = data[0].x.size();
  std::map<std::string, std::size_t> index;
  for (const auto& ex : data) {
    if (ex.x.size() != p.dimension)
      throw TrainingError("dimension mismatch: expected " + std::to_string(p.dimension) + ", got " +
                          std::to_string(ex.x.size()));
    index.emplace(ex.label, 0);
  }
  if (index.size() < 2) throw TrainingError("need at least 2 classes, got " + std::to_string(index.size()));
  for (auto& [label, idx] : index) {
    idx = p.classes.size();
    p.classes.push_back(label);
  }
  for (const auto& ex : data) p.class_of.push_back(index[ex.label]);
  return p;
}

std::vector<std::pair<std::size_t, std::size_t>> class_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  return pairs;
}

// Dual: min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
BinaryMachine train_machine(std::span<const LabeledVector> data, const Problem& prob, std::size_t pos,
                            std::size_t neg, const KernelSpec& kernel, double C, const SvmParams& params) {
  std::vector<std::size_t> members;
  std::vector<double> y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (prob.class_of[i] == pos) {
      members.push_back(i);
      y.push_back(1.0);
    } else if (prob.class_of[i] == neg) {
      members.push_back(i);
      y.push_back(-1.0);
    }
  }
  const std::size_t n = members.size();
  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double q = y[i] * y[j] * kernel(data[members[i]].x, data[members[j]].x);
      Q[i * n + j] = q;
      Q[j * n + i] = q;
    }

  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0 : alpha[t] < C; };

  BinaryMachine m;
  m.positive = pos;
  m.negative = neg;
  const std::size_t cap = std::max<std::size_t>(1, params.iteration_factor * n);
  double gmax = 0, gmin = 0;
  std::size_t iter = 0;
  for (;;) {
    std::size_t i = n, j = n;
    gmax = -INFINITY;
    gmin = INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < params.tolerance) {
      m.converged = true;
      break;
    }
    if (iter >= cap) break;
    ++iter;

    const double old_i = alpha[i], old_j = alpha[j];
    const double* Qi = &Q[i * n];
    const double* Qj = &Q[j * n];
    if (y[i] != y[j]) {
      double quad = Qi[i] + Qj[j] + 2 * Qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Qi[i] + Qj[j] - 2 * Qi[j];
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Qi[t] * di + Qj[t] * dj;
  }
  m.iterations = iter;

  double free_sum = 0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0 && alpha[t] < C) {
      free_sum += -y[t] * G[t];
      ++free_count;
    }
  if (free_count > 0)
    m.bias = free_sum / static_cast<double>(free_count);
  else if (std::isfinite(gmax) && std::isfinite(gmin))
    m.bias = (gmax + gmin) / 2;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0) continue;
    m.support_vectors.push_back(data[members[t]].x);
    m.coef.push_back(alpha[t] * y[t]);
    m.support_indices.push_back(members[t]);
  }
  return m;
}

SvmModel train_impl(std::span<const LabeledVector> data, const KernelSpec& kernel, double C,
                    const SvmParams& params, bool parallel) {
  kernel.validate();
  if (!(C > 0)) throw TrainingError("C must be positive");
  const Problem prob = prepare(data);
  const auto pairs = class_pairs(prob.classes.size());
  SvmModel model;
  model.classes = prob.classes;
  model.kernel = kernel;
  model.C = C;
  model.dimension = prob.dimension;
  model.machines.resize(pairs.size());
  const auto count = static_cast<std::ptrdiff_t>(pairs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < count; ++k)
      model.machines[k] = train_machine(data, prob, pairs[k].first, pairs[k].second, kernel, C, params);
  } else {
    for (std::ptrdiff_t k = 0; k < count; ++k)
      model.machines[k] = train_machine(data, prob, pairs[k].first, pairs[k].second, kernel, C, params);
  }
  return model;
}

double accuracy_percent(const SvmModel& model, std::span<const LabeledVector> data,
                        const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i : idx)
    if (predict_intent(model, data[i].x).top() == data[i].label) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(idx.size());
}

std::vector<LabeledVector> subset(std::span<const LabeledVector> data, const std::vector<std::size_t>& idx) {
  std::vector<LabeledVector> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

}  // namespace

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPoly: return "poly";
    case KernelKind::kSigmoid: return "sigmoid";
    case KernelKind::kRbf: return "rbf";
  }
  return "rbf";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "linear") return KernelKind::kLinear;
  if (name == "poly") return KernelKind::kPoly;
  if (name == "sigmoid") return KernelKind::kSigmoid;
  if (name == "rbf") return KernelKind::kRbf;
  throw Error("unknown kernel '" + std::string(name) + "'");
}

KernelSpec KernelSpec::with_defaults(KernelKind kind, std::size_t dimension) {
  KernelSpec k;
  k.kind = kind;
  k.gamma = dimension > 0 ? 1.0 / static_cast<double>(dimension) : 1.0;
  k.degree = 3;
  k.coef0 = 0.0;
  return k;
}

void KernelSpec::validate() const {
  if (kind != KernelKind::kLinear && !(gamma > 0)) throw Error("kernel gamma must be positive");
  if (kind == KernelKind::kPoly && degree < 2) throw Error("poly kernel degree must be at least 2");
}

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const {
  if (kind == KernelKind::kRbf) {
    double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      d2 += d * d;
    }
    return std::exp(-gamma * d2);
  }
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  switch (kind) {
    case KernelKind::kLinear: return dot;
    case KernelKind::kPoly: return std::pow(gamma * dot + coef0, degree);
    case KernelKind::kSigmoid: return std::tanh(gamma * dot + coef0);
    case KernelKind::kRbf: break;
  }
  return dot;
}

SvmModel train_svm(std::span<const LabeledVector> data, const KernelSpec& kernel, double C,
                   const SvmParams& params) {
  return train_impl(data, kernel, C, params, true);
}

namespace reference {
SvmModel train_svm(std::span<const LabeledVector> data, const KernelSpec& kernel, double C,
                   const SvmParams& params) {
  return train_impl(data, kernel, C, params, false);
}
}  // namespace reference

double decision_value(const BinaryMachine& machine, const KernelSpec& kernel, std::span<const double> x) {
  double f = machine.bias;
  for (std::size_t i = 0; i < machine.coef.size(); ++i) f += machine.coef[i] * kernel(machine.support_vectors[i], x);
  return f;
}

IntentPrediction predict_intent(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dimension)
    throw ModelError("dimension mismatch: model expects " + std::to_string(model.dimension) + ", got " +
                     std::to_string(x.size()));
  const std::size_t n = model.classes.size();
  std::vector<double> votes(n, 0.0), margins(n, 0.0);
  for (const auto& m : model.machines) {
    const double d = decision_value(m, model.kernel, x);
    if (std::abs(d) <= kTieBand) {
      votes[m.positive] += 0.5;
      votes[m.negative] += 0.5;
    } else if (d > 0) {
      votes[m.positive] += 1.0;
    } else {
      votes[m.negative] += 1.0;
    }
    margins[m.positive] += d;
    margins[m.negative] -= d;
  }
  std::vector<double> score(n);
  double top = -INFINITY;
  for (std::size_t c = 0; c < n; ++c) {
    score[c] = votes[c] + (1.0 / (1.0 + std::exp(-margins[c]))) / static_cast<double>(n);
    top = std::max(top, score[c]);
  }
  double z = 0;
  for (auto& s : score) {
    s = std::exp(s - top);
    z += s;
  }
  IntentPrediction p;
  for (std::size_t c = 0; c < n; ++c) p.ranking.emplace_back(model.classes[c], score[c] / z);
  std::stable_sort(p.ranking.begin(), p.ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return p;
}

double max_kkt_violation(const SvmModel& model, std::span<const LabeledVector> data) {
  double worst = 0;
  for (const auto& m : model.machines) {
    std::map<std::size_t, double> alpha;
    for (std::size_t k = 0; k < m.coef.size(); ++k) alpha[m.support_indices[k]] = std::abs(m.coef[k]);
    for (std::size_t i = 0; i < data.size(); ++i) {
      double y;
      if (data[i].label == model.classes[m.positive])
        y = 1.0;
      else if (data[i].label == model.classes[m.negative])
        y = -1.0;
      else
        continue;
      const double margin = y * decision_value(m, model.kernel, data[i].x);
      const auto it = alpha.find(i);
      const double a = it == alpha.end() ? 0.0 : it->second;
      double v;
      if (a <= 0)
        v = std::max(0.0, 1.0 - margin);
      else if (a >= model.C)
        v = std::max(0.0, margin - 1.0);
      else
        v = std::abs(margin - 1.0);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

GridSearchResult grid_search_C(std::span<const LabeledVector> data, const KernelSpec& kernel,
                               const std::vector<double>& grid, std::size_t folds, std::uint64_t seed,
                               const SvmParams& params) {
  if (grid.empty()) throw Error("C grid is empty");
  std::vector<std::string> labels;
  for (const auto& ex : data) labels.push_back(ex.label);
  const FoldSplit split = stratified_kfold(labels, folds, seed);

  GridSearchResult result{grid.front(), -1.0, {}};
  for (double C : grid) {
    double sum = 0;
    for (std::size_t f = 0; f < split.size(); ++f) {
      auto train_idx = split.train_indices(f);
      const auto& test_idx = split.folds[f];
      if (train_idx.empty()) train_idx = test_idx;
      const auto train = subset(data, train_idx);
      const SvmModel model = train_svm(train, kernel, C, params);
      sum += accuracy_percent(model, data, test_idx);
    }
    const double acc = sum / static_cast<double>(split.size());
    result.table.push_back({C, acc});
    if (acc > result.best_accuracy || (acc == result.best_accuracy && C < result.best_C)) {
      result.best_accuracy = acc;
      result.best_C = C;
    }
  }
  return result;
}

std::vector<KernelRow> kernel_sweep(std::span<const LabeledVector> data, const std::vector<KernelSpec>& kernels,
                                    const std::vector<double>& grid, std::size_t folds, std::uint64_t seed,
                                    const SvmParams& params) {
  std::vector<KernelRow> rows;
  for (const auto& k : kernels) {
    const auto gs = grid_search_C(data, k, grid, folds, seed, params);
    rows.push_back({kernel_name(k.kind), gs.best_C, gs.best_accuracy});
  }
  return rows;
}

}  // namespace cbot::svm
