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

#include "cbot/crf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cbot/error.hpp"

namespace cbot::crf {
namespace {

struct Compiled {
  std::vector<std::vector<std::pair<std::size_t, double>>> feats;
  std::vector<std::size_t> gold;  // empty when untagged

  std::size_t length() const { return feats.size(); }
};

Compiled compile_features(const CrfModel& model, std::span<const FeatureVector> features) {
  Compiled c;
  c.feats.resize(features.size());
  for (std::size_t t = 0; t < features.size(); ++t)
    for (const auto& [name, value] : features[t]) {
      const int f = model.feature_index(name);
      if (f >= 0 && value != 0.0) c.feats[t].emplace_back(static_cast<std::size_t>(f), value);
    }
  return c;
}

Compiled compile(const CrfModel& model, const TaggedSequence& seq) {
  if (seq.features.size() != seq.tags.size()) throw Error("features and tags differ in length");
  if (seq.features.empty()) throw Error("empty sequence");
  Compiled c = compile_features(model, seq.features);
  for (const auto& tag : seq.tags) {
    const int y = model.label_index(tag.str());
    if (y < 0) throw Error("unknown label '" + tag.str() + "'");
    c.gold.push_back(static_cast<std::size_t>(y));
  }
  return c;
}

Lattice lattice_of(const CrfModel& model, const Compiled& c) {
  const std::size_t L = model.num_labels();
  Lattice lat{c.length(), L, std::vector<double>(c.length() * L, 0.0)};
  for (std::size_t t = 0; t < c.length(); ++t)
    for (const auto& [f, x] : c.feats[t])
      for (std::size_t y = 0; y < L; ++y) lat.emit[t * L + y] += x * model.emission(f, y);
  return lat;
}


std::vector<double> forward(const CrfModel& model, const Lattice& lat) {
  const std::size_t T = lat.length, L = lat.labels;
  std::vector<double> alpha(T * L);
  for (std::size_t y = 0; y < L; ++y) alpha[y] = lat.at(0, y);
  std::vector<double> buf(L);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t z = 0; z < L; ++z) buf[z] = alpha[(t - 1) * L + z] + model.transition(z, y);
      alpha[t * L + y] = lat.at(t, y) + log_sum_exp(buf);
    }
  return alpha;
}

std::vector<double> backward(const CrfModel& model, const Lattice& lat) {
  const std::size_t T = lat.length, L = lat.labels;
  std::vector<double> beta(T * L, 0.0);
  std::vector<double> buf(L);
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t z = 0; z < L; ++z)
        buf[z] = model.transition(y, z) + lat.at(t + 1, z) + beta[(t + 1) * L + z];
      beta[t * L + y] = log_sum_exp(buf);
    }
  return beta;
}

double lattice_log_z(const CrfModel& model, const Lattice& lat) {
  const auto alpha = forward(model, lat);
  return log_sum_exp(std::span<const double>(alpha).subspan((lat.length - 1) * lat.labels, lat.labels));
}

double gold_score(const CrfModel& model, const Lattice& lat, const std::vector<std::size_t>& gold) {
  double s = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    s += lat.at(t, gold[t]);
    if (t > 0) s += model.transition(gold[t - 1], gold[t]);
  }
  return s;
}

Marginals marginals_of(const CrfModel& model, const Lattice& lat) {
  const std::size_t T = lat.length, L = lat.labels;
  const auto alpha = forward(model, lat);
  const auto beta = backward(model, lat);
  Marginals m;
  m.length = T;
  m.labels = L;
  m.log_z = log_sum_exp(std::span<const double>(alpha).subspan((T - 1) * L, L));
  m.node.resize(T * L);
  for (std::size_t i = 0; i < T * L; ++i) m.node[i] = std::exp(alpha[i] + beta[i] - m.log_z);
  if (T > 1) m.edge.resize((T - 1) * L * L);
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t y = 0; y < L; ++y)
      for (std::size_t z = 0; z < L; ++z)
        m.edge[(t * L + y) * L + z] = std::exp(alpha[t * L + y] + model.transition(y, z) + lat.at(t + 1, z) +
                                               beta[(t + 1) * L + z] - m.log_z);
  return m;
}

struct SequenceGradient {
  double log_likelihood = 0.0;
  std::map<std::size_t, double> emission;  // flat index -> value
  std::vector<double> transition;
};

SequenceGradient sequence_gradient(const CrfModel& model, const Compiled& c) {
  const std::size_t L = model.num_labels();
  const Lattice lat = lattice_of(model, c);
  const Marginals m = marginals_of(model, lat);
  SequenceGradient g;
  g.log_likelihood = gold_score(model, lat, c.gold) - m.log_z;
  for (std::size_t t = 0; t < c.length(); ++t)
    for (const auto& [f, x] : c.feats[t])
      for (std::size_t y = 0; y < L; ++y) {
        const double observed = (y == c.gold[t]) ? 1.0 : 0.0;
        g.emission[f * L + y] += x * (observed - m.node[t * L + y]);
      }
  g.transition.assign(L * L, 0.0);
  for (std::size_t t = 0; t + 1 < c.length(); ++t)
    for (std::size_t y = 0; y < L; ++y)
      for (std::size_t z = 0; z < L; ++z) {
        const double observed = (y == c.gold[t] && z == c.gold[t + 1]) ? 1.0 : 0.0;
        g.transition[y * L + z] += observed - m.edge[(t * L + y) * L + z];
      }
  return g;
}

CrfGradient reduce(const CrfModel& model, const std::vector<SequenceGradient>& parts) {
  CrfGradient total;
  total.emission.assign(model.emission_weights().size(), 0.0);
  total.transition.assign(model.transition_weights().size(), 0.0);
  for (const auto& p : parts) {
    total.log_likelihood += p.log_likelihood;
    for (const auto& [idx, v] : p.emission) total.emission[idx] += v;
    for (std::size_t i = 0; i < p.transition.size(); ++i) total.transition[i] += p.transition[i];
  }
  return total;
}

CrfGradient gradient_compiled(const CrfModel& model, const std::vector<Compiled>& seqs, bool parallel) {
  std::vector<SequenceGradient> parts(seqs.size());
  const auto n = static_cast<std::ptrdiff_t>(seqs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t s = 0; s < n; ++s) parts[s] = sequence_gradient(model, seqs[s]);
  } else {
    for (std::ptrdiff_t s = 0; s < n; ++s) parts[s] = sequence_gradient(model, seqs[s]);
  }
  return reduce(model, parts);
}

double log_likelihood_compiled(const CrfModel& model, const std::vector<Compiled>& seqs) {
  std::vector<double> parts(seqs.size());
  const auto n = static_cast<std::ptrdiff_t>(seqs.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const Lattice lat = lattice_of(model, seqs[s]);
    parts[s] = gold_score(model, lat, seqs[s].gold) - lattice_log_z(model, lat);
  }
  double sum = 0;
  for (double p : parts) sum += p;
  return sum;
}

double penalty(const CrfModel& model) {
  const CrfHyper& h = model.hyper();
  double l1 = 0, l2 = 0;
  for (double w : model.emission_weights()) {
    l1 += std::abs(w);
    l2 += w * w;
  }
  for (double w : model.transition_weights()) {
    l1 += std::abs(w);
    l2 += w * w;
  }
  return h.l1 * l1 + h.l2 * l2;
}

std::vector<Compiled> compile_all(const CrfModel& model, std::span<const TaggedSequence> batch) {
  std::vector<Compiled> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(compile(model, s));
  return out;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

CrfModel::CrfModel(std::vector<std::string> labels, std::vector<std::string> features, CrfHyper hyper)
    : labels_(std::move(labels)), features_(std::move(features)), hyper_(hyper) {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!label_index_.emplace(labels_[i], i).second) throw Error("duplicate label '" + labels_[i] + "'");
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (!feature_index_.emplace(features_[i], i).second) throw Error("duplicate feature '" + features_[i] + "'");
  emission_.assign(features_.size() * labels_.size(), 0.0);
  transition_.assign(labels_.size() * labels_.size(), 0.0);
}

int CrfModel::label_index(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  return it == label_index_.end() ? -1 : static_cast<int>(it->second);
}

int CrfModel::feature_index(std::string_view feature) const {
  auto it = feature_index_.find(std::string(feature));
  return it == feature_index_.end() ? -1 : static_cast<int>(it->second);
}

std::size_t CrfModel::nonzero_weights() const {
  std::size_t n = 0;
  for (double w : emission_) n += w != 0.0;
  for (double w : transition_) n += w != 0.0;
  return n;
}

double log_sum_exp(std::span<const double> v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  if (m == -INFINITY) return -INFINITY;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Lattice score_lattice(const CrfModel& model, std::span<const FeatureVector> features) {
  return lattice_of(model, compile_features(model, features));
}

double log_partition(const CrfModel& model, std::span<const FeatureVector> features) {
  if (features.empty()) throw Error("log_partition of an empty sequence");
  return lattice_log_z(model, score_lattice(model, features));
}

ViterbiResult viterbi(const CrfModel& model, std::span<const FeatureVector> features) {
  ViterbiResult r;
  if (features.empty()) return r;
  const Lattice lat = score_lattice(model, features);
  const std::size_t T = lat.length, L = lat.labels;
  // best[t][y]: best score of positions t..T-1 given label y at t.
  std::vector<double> best(T * L);
  for (std::size_t y = 0; y < L; ++y) best[(T - 1) * L + y] = lat.at(T - 1, y);
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t y = 0; y < L; ++y) {
      double m = -INFINITY;
      for (std::size_t z = 0; z < L; ++z) m = std::max(m, model.transition(y, z) + best[(t + 1) * L + z]);
      best[t * L + y] = lat.at(t, y) + m;
    }
  std::size_t y = 0;
  for (std::size_t c = 1; c < L; ++c)
    if (best[c] > best[y]) y = c;
  r.score = best[y];
  r.path.push_back(y);
  for (std::size_t t = 1; t < T; ++t) {
    std::size_t arg = 0;
    double m = -INFINITY;
    for (std::size_t z = 0; z < L; ++z) {
      const double v = model.transition(y, z) + best[t * L + z];
      if (v > m) {
        m = v;
        arg = z;
      }
    }
    y = arg;
    r.path.push_back(y);
  }
  return r;
}

double path_score(const CrfModel& model, std::span<const FeatureVector> features,
                  std::span<const std::size_t> path) {
  const Lattice lat = score_lattice(model, features);
  double s = 0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += lat.at(t, path[t]);
    if (t > 0) s += model.transition(path[t - 1], path[t]);
  }
  return s;
}

Marginals forward_backward(const CrfModel& model, std::span<const FeatureVector> features) {
  if (features.empty()) throw Error("forward_backward of an empty sequence");
  return marginals_of(model, score_lattice(model, features));
}

CrfGradient crf_gradient(const CrfModel& model, std::span<const TaggedSequence> batch) {
  return gradient_compiled(model, compile_all(model, batch), true);
}

namespace reference {
CrfGradient crf_gradient(const CrfModel& model, std::span<const TaggedSequence> batch) {
  return gradient_compiled(model, compile_all(model, batch), false);
}
}  // namespace reference

double log_likelihood(const CrfModel& model, std::span<const TaggedSequence> batch) {
  return log_likelihood_compiled(model, compile_all(model, batch));
}

double objective(const CrfModel& model, std::span<const TaggedSequence> batch) {
  return log_likelihood(model, batch) - penalty(model);
}

CrfTrainResult train_crf(std::span<const TaggedSequence> sequences, const CrfHyper& hyper) {
  if (sequences.empty()) throw TrainingError("empty CRF training set");
  if (hyper.l1 < 0 || hyper.l2 < 0) throw TrainingError("regularization must be non-negative");
  std::set<std::string> labels{"O"};
  std::vector<std::string> features;
  std::set<std::string> seen;
  for (const auto& s : sequences) {
    for (const auto& tag : s.tags) labels.insert(tag.str());
    for (const auto& fv : s.features)
      for (const auto& [name, value] : fv)
        if (seen.insert(name).second) features.push_back(name);
  }
  CrfTrainResult result{CrfModel(std::vector<std::string>(labels.begin(), labels.end()), std::move(features), hyper),
                        {}};
  CrfModel& model = result.model;
  const auto compiled = compile_all(model, sequences);

  auto current = log_likelihood_compiled(model, compiled) - penalty(model);
  result.objective_trace.push_back(current);
  double step = hyper.initial_step;
  auto& em = model.emission_weights();
  auto& tr = model.transition_weights();
  for (std::size_t it = 0; it < hyper.max_iterations; ++it) {
    const CrfGradient g = gradient_compiled(model, compiled, true);
    const auto em0 = em;
    const auto tr0 = tr;
    bool accepted = false;
    while (step > 1e-14) {
      for (std::size_t i = 0; i < em.size(); ++i)
        em[i] = soft_threshold(em0[i] + step * (g.emission[i] - 2 * hyper.l2 * em0[i]), step * hyper.l1);
      for (std::size_t i = 0; i < tr.size(); ++i)
        tr[i] = soft_threshold(tr0[i] + step * (g.transition[i] - 2 * hyper.l2 * tr0[i]), step * hyper.l1);
      const double candidate = log_likelihood_compiled(model, compiled) - penalty(model);
      if (candidate > current) {
        current = candidate;
        accepted = true;
        break;
      }
      step /= 2;
    }
    if (!accepted) {
      em = em0;
      tr = tr0;
      break;
    }
    result.objective_trace.push_back(current);
    step *= 2;
  }
  return result;
}

std::vector<BilouTag> predict_tags(const CrfModel& model, std::span<const Token> tokens) {
  std::vector<BilouTag> tags;
  if (tokens.empty()) return tags;
  std::vector<FeatureVector> feats;
  for (std::size_t i = 0; i < tokens.size(); ++i) feats.push_back(crf_features(tokens, i));
  for (std::size_t y : viterbi(model, feats).path) tags.push_back(BilouTag::parse(model.labels()[y]));
  return tags;
}

std::vector<EntitySpan> extract_entities(const CrfModel& model, std::string_view text,
                                         std::span<const Token> tokens) {
  if (tokens.empty()) return {};
  const auto tags = predict_tags(model, tokens);
  return bilou_decode(tags, tokens, text);
}

TaggedSequence make_sequence(const AnnotatedUtterance& utt) {
  const auto tagged = bilou_encode(utt);
  std::vector<Token> tokens;
  TaggedSequence seq;
  for (const auto& tt : tagged) {
    tokens.push_back(tt.token);
    seq.tags.push_back(tt.tag);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) seq.features.push_back(crf_features(tokens, i));
  return seq;
}

}  // namespace cbot::crf
