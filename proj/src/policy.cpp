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

#include "cbot/policy.hpp"

#include <algorithm>
#include <cmath>

#include "cbot/error.hpp"
#include "cbot/knn.hpp"
#include "cbot/util.hpp"

namespace cbot::policy {
namespace {

struct Layout {
  std::size_t N, H, A;
  std::size_t W, U, b, V, c, total;

  explicit Layout(const PolicyModel& m) : N(m.input_size), H(m.hidden), A(m.outputs) {
    W = 0;
    U = W + 4 * H * N;
    b = U + 4 * H * H;
    V = b + 4 * H;
    c = V + A * H;
    total = c + A;
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Forward {
  std::size_t T = 0;
  std::vector<std::vector<std::size_t>> active;  // nonzero inputs per step
  std::vector<double> gi, gf, go, gg, c, tc, h;  // T x H each
  std::vector<double> prob;                      // A
};

Forward run_forward(const PolicyModel& m, const Layout& L, std::span<const StateVector> window) {
  Forward f;
  f.T = window.size();
  const std::size_t H = L.H;
  for (auto* v : {&f.gi, &f.gf, &f.go, &f.gg, &f.c, &f.tc, &f.h}) v->assign(f.T * H, 0.0);
  f.active.resize(f.T);
  const double* p = m.params.data();
  std::vector<double> z(4 * H);
  for (std::size_t t = 0; t < f.T; ++t) {
    if (window[t].size() != L.N)
      throw ModelError("state has " + std::to_string(window[t].size()) + " entries, policy expects " +
                       std::to_string(L.N));
    for (std::size_t k = 0; k < L.N; ++k)
      if (window[t][k]) f.active[t].push_back(k);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = p[L.b + r];
      const double* wrow = p + L.W + r * L.N;
      for (std::size_t k : f.active[t]) s += wrow[k];
      if (t > 0) {
        const double* urow = p + L.U + r * H;
        const double* hp = &f.h[(t - 1) * H];
        for (std::size_t j = 0; j < H; ++j) s += urow[j] * hp[j];
      }
      z[r] = s;
    }
    for (std::size_t j = 0; j < H; ++j) {
      const std::size_t o = t * H + j;
      f.gi[o] = sigmoid(z[j]);
      f.gf[o] = sigmoid(z[H + j]);
      f.go[o] = sigmoid(z[2 * H + j]);
      f.gg[o] = std::tanh(z[3 * H + j]);
      const double cprev = t > 0 ? f.c[o - H] : 0.0;
      f.c[o] = f.gf[o] * cprev + f.gi[o] * f.gg[o];
      f.tc[o] = std::tanh(f.c[o]);
      f.h[o] = f.go[o] * f.tc[o];
    }
  }
  f.prob.assign(L.A, 0.0);
  const double* hT = f.T > 0 ? &f.h[(f.T - 1) * H] : nullptr;
  double top = -INFINITY;
  for (std::size_t a = 0; a < L.A; ++a) {
    double s = p[L.c + a];
    if (hT)
      for (std::size_t j = 0; j < H; ++j) s += p[L.V + a * H + j] * hT[j];
    f.prob[a] = s;
    top = std::max(top, s);
  }
  double zsum = 0;
  for (auto& v : f.prob) {
    v = std::exp(v - top);
    zsum += v;
  }
  for (auto& v : f.prob) v /= zsum;
  return f;
}

// Adds d(-log p[target])/dparams into `grad`; returns the loss.
double backward(const PolicyModel& m, const Layout& L, const PolicyExample& ex, std::vector<double>& grad) {
  const Forward f = run_forward(m, L, ex.window);
  const std::size_t H = L.H, T = f.T;
  const double* p = m.params.data();
  double* g = grad.data();
  const double loss = -std::log(std::max(f.prob[ex.target], 1e-300));

  std::vector<double> dlogits = f.prob;
  dlogits[ex.target] -= 1.0;
  std::vector<double> dh(H, 0.0), dc(H, 0.0);
  const double* hT = &f.h[(T - 1) * H];
  for (std::size_t a = 0; a < L.A; ++a) {
    g[L.c + a] += dlogits[a];
    for (std::size_t j = 0; j < H; ++j) {
      g[L.V + a * H + j] += dlogits[a] * hT[j];
      dh[j] += p[L.V + a * H + j] * dlogits[a];
    }
  }
  std::vector<double> dz(4 * H);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t j = 0; j < H; ++j) {
      const std::size_t o = t * H + j;
      const double cprev = t > 0 ? f.c[o - H] : 0.0;
      dc[j] += dh[j] * f.go[o] * (1.0 - f.tc[o] * f.tc[o]);
      const double d_o = dh[j] * f.tc[o];
      const double d_i = dc[j] * f.gg[o];
      const double d_g = dc[j] * f.gi[o];
      const double d_f = dc[j] * cprev;
      dz[j] = d_i * f.gi[o] * (1.0 - f.gi[o]);
      dz[H + j] = d_f * f.gf[o] * (1.0 - f.gf[o]);
      dz[2 * H + j] = d_o * f.go[o] * (1.0 - f.go[o]);
      dz[3 * H + j] = d_g * (1.0 - f.gg[o] * f.gg[o]);
      dc[j] *= f.gf[o];
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double d = dz[r];
      g[L.b + r] += d;
      double* wrow = g + L.W + r * L.N;
      for (std::size_t k : f.active[t]) wrow[k] += d;
      if (t > 0) {
        double* urow = g + L.U + r * H;
        const double* uprm = p + L.U + r * H;
        const double* hp = &f.h[(t - 1) * H];
        for (std::size_t j = 0; j < H; ++j) {
          urow[j] += d * hp[j];
          dh[j] += uprm[j] * d;
        }
      }
    }
  }
  return loss;
}

std::vector<StateVector> pad(std::span<const StateVector> states, std::size_t input_size, std::size_t max_history) {
  std::vector<StateVector> w;
  const std::size_t keep = std::min(states.size(), max_history);
  for (std::size_t i = keep; i < max_history; ++i) w.emplace_back(input_size, 0);
  for (std::size_t i = states.size() - keep; i < states.size(); ++i) w.push_back(states[i]);
  return w;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::size_t state_size(const DomainSpec& d) {
  return d.intents.size() + d.entity_names.size() + d.slot_names.size() + d.actions.size();
}

StateVector featurize_tracker(const ConversationTracker& tracker, const DomainSpec& d) {
  StateVector s(state_size(d), 0);
  const std::size_t e_off = d.intents.size();
  const std::size_t s_off = e_off + d.entity_names.size();
  const std::size_t a_off = s_off + d.slot_names.size();
  if (const auto& msg = tracker.latest_message()) {
    const int i = d.intent_index(msg->intent);
    if (i < 0) throw ModelError("intent '" + msg->intent + "' is not in the domain");
    s[static_cast<std::size_t>(i)] = 1;
    for (const auto& e : msg->entities) {
      const int k = d.entity_index(e.entity_name);
      if (k < 0) throw ModelError("entity '" + e.entity_name + "' is not in the domain");
      s[e_off + static_cast<std::size_t>(k)] = 1;
    }
  }
  for (const auto& [name, value] : tracker.slots()) {
    const int k = d.slot_index(name);
    if (k < 0) throw ModelError("slot '" + name + "' is not in the domain");
    s[s_off + static_cast<std::size_t>(k)] = 1;
  }
  if (const auto& a = tracker.last_action()) {
    const int k = d.action_index(*a);
    if (k < 0) throw ModelError("action '" + *a + "' is not in the domain");
    s[a_off + static_cast<std::size_t>(k)] = 1;
  }
  return s;
}

std::vector<StateVector> state_history(const ConversationTracker& tracker, const DomainSpec& domain) {
  std::vector<StateVector> history;
  ConversationTracker scratch(tracker.sender_id());
  for (const auto& e : tracker.events()) {
    if (std::holds_alternative<ActionExecuted>(e)) history.push_back(featurize_tracker(scratch, domain));
    scratch.apply(e);
    if (std::holds_alternative<Restarted>(e)) history.clear();
  }
  history.push_back(featurize_tracker(scratch, domain));
  return history;
}

std::vector<StateVector> state_window(const ConversationTracker& tracker, const DomainSpec& domain,
                                      std::size_t max_history) {
  const auto history = state_history(tracker, domain);
  return pad(history, state_size(domain), max_history);
}

void apply_user_turn(ConversationTracker& tracker, const UserTurn& turn) {
  UserMessage msg;
  msg.intent = turn.intent;
  for (const auto& [entity, value] : turn.entities) {
    EntitySpan span;
    span.entity_name = entity;
    span.value = knn::regex_normalize(value);
    msg.entities.push_back(span);
  }
  tracker.apply(msg);
  for (const auto& e : msg.entities) tracker.apply(SlotSet{e.entity_name, e.value});
}

std::vector<PolicyExample> stories_to_sequences(const std::vector<Story>& stories, const DomainSpec& domain,
                                                std::size_t max_history) {
  if (max_history == 0) throw Error("max_history must be positive");
  std::vector<PolicyExample> out;
  const std::size_t listen = static_cast<std::size_t>(domain.action_index(kActionListen));
  for (const auto& story : stories) {
    ConversationTracker tracker(story.name);
    auto emit = [&](std::size_t target) {
      out.push_back({state_window(tracker, domain, max_history), target});
    };
    bool in_turn = false;
    for (const auto& step : story.steps) {
      if (const auto* turn = std::get_if<UserTurn>(&step)) {
        if (in_turn) {
          emit(listen);
          tracker.execute(kActionListen);
        }
        if (domain.intent_index(turn->intent) < 0)
          throw ModelError("story " + story.name + " uses unknown intent '" + turn->intent + "'");
        apply_user_turn(tracker, *turn);
        in_turn = true;
      } else {
        const auto& name = std::get<BotAction>(step).name;
        const int a = domain.action_index(name);
        if (a < 0) throw ModelError("story " + story.name + " uses unknown action '" + name + "'");
        emit(static_cast<std::size_t>(a));
        tracker.execute(name);
      }
    }
    if (in_turn) emit(listen);
  }
  return out;
}

PolicyModel PolicyModel::random(std::size_t input_size, std::size_t hidden, std::size_t outputs,
                                std::size_t max_history, std::uint64_t seed) {
  PolicyModel m;
  m.input_size = input_size;
  m.hidden = hidden;
  m.outputs = outputs;
  m.max_history = max_history;
  m.params.assign(m.param_count(), 0.0);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(hidden, 1)));
  for (auto& w : m.params) w = rng.uniform(-scale, scale);
  return m;
}

std::size_t PolicyModel::param_count() const {
  return 4 * hidden * input_size + 4 * hidden * hidden + 4 * hidden + outputs * hidden + outputs;
}

LossGradient loss_and_gradient(const PolicyModel& model, std::span<const PolicyExample> batch) {
  const Layout L(model);
  LossGradient out;
  out.gradient.assign(L.total, 0.0);
  std::vector<double> local(L.total);
  for (const auto& ex : batch) {
    std::fill(local.begin(), local.end(), 0.0);
    out.loss += backward(model, L, ex, local);
    for (std::size_t i = 0; i < L.total; ++i) out.gradient[i] += local[i];
  }
  return out;
}

double loss(const PolicyModel& model, std::span<const PolicyExample> batch) {
  const Layout L(model);
  double sum = 0;
  for (const auto& ex : batch) {
    const auto f = run_forward(model, L, ex.window);
    sum += -std::log(std::max(f.prob[ex.target], 1e-300));
  }
  return sum;
}

double accuracy(const PolicyModel& model, std::span<const PolicyExample> batch) {
  if (batch.empty()) return 0.0;
  const Layout L(model);
  std::size_t ok = 0;
  for (const auto& ex : batch) ok += argmax(run_forward(model, L, ex.window).prob) == ex.target;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(batch.size());
}

std::vector<double> predict_action(const PolicyModel& model, std::span<const StateVector> states) {
  if (states.empty()) throw ModelError("predict_action needs at least one state");
  for (const auto& s : states)
    if (s.size() != model.input_size)
      throw ModelError("state has " + std::to_string(s.size()) + " entries, policy expects " +
                       std::to_string(model.input_size));
  const auto window = pad(states, model.input_size, model.max_history);
  return run_forward(model, Layout(model), window).prob;
}

PolicyTrainResult train_policy(std::span<const PolicyExample> examples, const DomainSpec& domain,
                               const PolicyConfig& config) {
  if (examples.empty()) throw TrainingError("no policy training examples");
  PolicyTrainResult r;
  r.model = PolicyModel::random(state_size(domain), config.hidden, domain.actions.size(), config.max_history,
                                config.seed);
  r.model.domain_fingerprint = domain.fingerprint();
  PolicyModel& m = r.model;
  const double n = static_cast<double>(examples.size());

  std::vector<double> m1(m.params.size(), 0.0), m2(m.params.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = config.learning_rate;
  std::size_t step = 0;
  double current = loss(m, examples) / n;
  r.trace.initial_loss = current;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto lg = loss_and_gradient(m, examples);
    double norm = 0;
    for (auto& g : lg.gradient) {
      g /= n;
      norm += g * g;
    }
    norm = std::sqrt(norm);
    if (norm > config.clip_norm)
      for (auto& g : lg.gradient) g *= config.clip_norm / norm;

    const auto params0 = m.params;
    const auto m1_0 = m1, m2_0 = m2;
    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < m.params.size(); ++i) {
        const double g = lg.gradient[i];
        m1[i] = beta1 * m1_0[i] + (1 - beta1) * g;
        m2[i] = beta2 * m2_0[i] + (1 - beta2) * g * g;
        m.params[i] = params0[i] - lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
      }
      const double candidate = loss(m, examples) / n;
      if (candidate < current) {
        current = candidate;
        accepted = true;
        break;
      }
      --step;
      lr /= 2;
      m.params = params0;
      m1 = m1_0;
      m2 = m2_0;
    }
    if (!accepted) break;
    const double acc = accuracy(m, examples);
    r.trace.epochs.push_back({current, acc});
    if (acc >= 100.0 && current < config.target_loss) break;
  }
  return r;
}

double policy_gradient_check(const PolicyModel& model, std::span<const PolicyExample> batch, double h) {
  const auto analytic = loss_and_gradient(model, batch).gradient;
  PolicyModel probe = model;
  double worst = 0;
  for (std::size_t i = 0; i < probe.params.size(); ++i) {
    const double w = probe.params[i];
    probe.params[i] = w + h;
    const double up = loss(probe, batch);
    probe.params[i] = w - h;
    const double down = loss(probe, batch);
    probe.params[i] = w;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace cbot::policy
