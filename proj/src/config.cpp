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

#include "cbot/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#include "cbot/error.hpp"
#include "cbot/util.hpp"

namespace cbot {
namespace {

using Scalar = std::variant<std::string, double, bool>;

struct Value {
  bool is_array = false;
  std::vector<Scalar> items;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class LineParser {
 public:
  LineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  Value value() {
    Value v;
    skip_space();
    if (peek() == '[') {
      ++pos_;
      v.is_array = true;
      skip_space();
      if (peek() == ']') {
        ++pos_;
      } else {
        for (;;) {
          v.items.push_back(scalar());
          skip_space();
          if (peek() == ',') {
            ++pos_;
            skip_space();
            if (peek() == ']') {
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          fail("expected ',' or ']' in array");
        }
      }
    } else {
      v.items.push_back(scalar());
    }
    skip_space();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected text after value");
    return v;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

  Scalar scalar() {
    if (peek() == '"') return quoted();
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t' &&
           s_[pos_] != '#')
      ++pos_;
    const std::string word(s_.substr(start, pos_ - start));
    if (word == "true") return true;
    if (word == "false") return false;
    if (word.empty()) fail("missing value");
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(word, &used);
    } catch (const std::exception&) {
      fail("invalid value '" + word + "'");
    }
    if (used != word.size() || !std::isfinite(d)) fail("invalid number '" + word + "'");
    return d;
  }

  std::string quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

struct Entry {
  Value value;
  std::size_t line;
};

const Scalar& single(const Entry& e, const std::string& key) {
  if (e.value.is_array) throw ParseError(key + " must not be an array", e.line);
  return e.value.items.front();
}

std::string as_string(const Scalar& s, const std::string& key, std::size_t line) {
  if (const auto* v = std::get_if<std::string>(&s)) return *v;
  throw ParseError(key + " must be a string", line);
}

double as_number(const Scalar& s, const std::string& key, std::size_t line) {
  if (const auto* v = std::get_if<double>(&s)) return *v;
  throw ParseError(key + " must be a number", line);
}

std::size_t as_count(const Scalar& s, const std::string& key, std::size_t line) {
  const double d = as_number(s, key, line);
  if (d < 0 || d != std::floor(d) || d > 1e15) throw ParseError(key + " must be a non-negative integer", line);
  return static_cast<std::size_t>(d);
}

bool as_bool(const Scalar& s, const std::string& key, std::size_t line) {
  if (const auto* v = std::get_if<bool>(&s)) return *v;
  throw ParseError(key + " must be true or false", line);
}

}  // namespace

EngineSettings PipelineConfig::default_engine_settings() {
  EngineSettings s;
  s.action_slots = {{"action_dn", "dn"}};
  return s;
}

std::filesystem::path PipelineConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

svm::KernelSpec PipelineConfig::kernel_spec(svm::KernelKind kind) const {
  auto spec = svm::KernelSpec::with_defaults(kind, embedding_dim);
  if (gamma > 0) spec.gamma = gamma;
  return spec;
}

knn::CorruptionSpec PipelineConfig::corruption_spec() const {
  knn::CorruptionSpec spec;
  spec.rules = corruption_rules;
  spec.variants_per_value = variants_per_value;
  spec.seed = stage_seed("corruptions");
  return spec;
}

std::uint64_t PipelineConfig::stage_seed(std::string_view stage) const { return hash_combine(seed, fnv1a(stage)); }

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;  // "section.key"
  std::map<std::string, Entry> actions;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ParseError("empty section name", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty() || key.find_first_of(" \t\"") != std::string::npos) throw ParseError("invalid key", line_no);
    Entry e{LineParser(line.substr(eq + 1), line_no).value(), line_no};
    auto& target = section == "actions" ? actions : entries;
    const std::string full = section == "actions" || section.empty() ? key : section + "." + key;
    if (!target.emplace(full, std::move(e)).second) throw ParseError("duplicate key " + full, line_no);
  }

  PipelineConfig c;
  c.base_dir = base_dir;
  using Setter = std::function<void(const Entry&, const std::string&)>;
  auto str = [](std::string& out) -> Setter {
    return [&out](const Entry& e, const std::string& k) { out = as_string(single(e, k), k, e.line); };
  };
  auto num = [](double& out) -> Setter {
    return [&out](const Entry& e, const std::string& k) { out = as_number(single(e, k), k, e.line); };
  };
  auto count = [](std::size_t& out) -> Setter {
    return [&out](const Entry& e, const std::string& k) { out = as_count(single(e, k), k, e.line); };
  };
  auto flag = [](bool& out) -> Setter {
    return [&out](const Entry& e, const std::string& k) { out = as_bool(single(e, k), k, e.line); };
  };
  std::map<std::string, Setter> setters = {
      {"seed",
       [&](const Entry& e, const std::string& k) {
         c.seed = static_cast<std::uint64_t>(as_count(single(e, k), k, e.line));
       }},
      {"paths.nlu", str(c.paths.nlu)},
      {"paths.templates", str(c.paths.templates)},
      {"paths.stories", str(c.paths.stories)},
      {"paths.test_stories", str(c.paths.test_stories)},
      {"paths.lexicon", str(c.paths.lexicon)},
      {"paths.knowledge", str(c.paths.knowledge)},
      {"paths.embeddings", str(c.paths.embeddings)},
      {"nlu.embedding_dim", count(c.embedding_dim)},
      {"nlu.augment_diacritics", flag(c.augment_diacritics)},
      {"nlu.confidence_threshold", num(c.engine.confidence_threshold)},
      {"svm.kernel",
       [&](const Entry& e, const std::string& k) {
         try {
           c.kernel = svm::parse_kernel(as_string(single(e, k), k, e.line));
         } catch (const ParseError&) {
           throw;
         } catch (const Error& err) {
           throw ParseError(err.what(), e.line);
         }
       }},
      {"svm.c_grid",
       [&](const Entry& e, const std::string& k) {
         c.c_grid.clear();
         for (const auto& s : e.value.items) c.c_grid.push_back(as_number(s, k, e.line));
       }},
      {"svm.gamma", num(c.gamma)},
      {"svm.folds", count(c.svm_folds)},
      {"crf.l1", num(c.crf.l1)},
      {"crf.l2", num(c.crf.l2)},
      {"crf.max_iterations", count(c.crf.max_iterations)},
      {"crf.initial_step", num(c.crf.initial_step)},
      {"knn.k", count(c.knn_k)},
      {"knn.reject_radius", num(c.reject_radius)},
      {"knn.variants_per_value", count(c.variants_per_value)},
      {"knn.rules",
       [&](const Entry& e, const std::string& k) {
         c.corruption_rules.clear();
         for (const auto& s : e.value.items) {
           try {
             c.corruption_rules.push_back(knn::parse_rule(as_string(s, k, e.line)));
           } catch (const ParseError&) {
             throw;
           } catch (const Error& err) {
             throw ParseError(err.what(), e.line);
           }
         }
       }},
      {"policy.hidden", count(c.policy.hidden)},
      {"policy.max_history", count(c.policy.max_history)},
      {"policy.epochs", count(c.policy.epochs)},
      {"policy.learning_rate", num(c.policy.learning_rate)},
      {"policy.clip_norm", num(c.policy.clip_norm)},
      {"policy.target_loss", num(c.policy.target_loss)},
      {"engine.max_actions", count(c.engine.max_actions)},
      {"engine.missing_answer_text", str(c.engine.missing_answer_text)},
      {"engine.low_confidence_text", str(c.engine.low_confidence_text)},
      {"eval.folds", count(c.eval_folds)},
      {"eval.ks",
       [&](const Entry& e, const std::string& k) {
         c.eval_ks.clear();
         for (const auto& s : e.value.items) c.eval_ks.push_back(as_count(s, k, e.line));
       }},
      {"eval.kernels",
       [&](const Entry& e, const std::string& k) {
         c.eval_kernels.clear();
         for (const auto& s : e.value.items) {
           c.eval_kernels.push_back(as_string(s, k, e.line));
           try {
             svm::parse_kernel(c.eval_kernels.back());
           } catch (const Error& err) {
             throw ParseError(err.what(), e.line);
           }
         }
       }},
  };
  for (const auto& [key, entry] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown key " + key, entry.line);
    it->second(entry, key);
  }
  if (!actions.empty()) {
    c.engine.action_slots.clear();
    for (const auto& [key, entry] : actions) c.engine.action_slots[key] = as_string(single(entry, key), key, entry.line);
  }

  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  check(!c.c_grid.empty(), "svm.c_grid must not be empty");
  for (double C : c.c_grid) check(C > 0, "svm.c_grid values must be positive");
  check(c.gamma >= 0, "svm.gamma must be >= 0");
  check(c.svm_folds >= 1, "svm.folds must be >= 1");
  check(c.embedding_dim >= 1, "nlu.embedding_dim must be >= 1");
  check(c.crf.l1 >= 0 && c.crf.l2 >= 0, "crf penalties must be >= 0");
  check(c.crf.initial_step > 0, "crf.initial_step must be positive");
  check(c.knn_k >= 1, "knn.k must be >= 1");
  check(c.reject_radius >= 0, "knn.reject_radius must be >= 0");
  check(c.policy.hidden >= 1 && c.policy.max_history >= 1, "policy sizes must be >= 1");
  check(c.policy.learning_rate > 0, "policy.learning_rate must be positive");
  check(c.engine.confidence_threshold >= 0 && c.engine.confidence_threshold <= 1,
        "nlu.confidence_threshold must lie in [0, 1]");
  check(c.engine.max_actions >= 1, "engine.max_actions must be >= 1");
  check(c.eval_folds >= 1, "eval.folds must be >= 1");
  check(!c.eval_ks.empty(), "eval.ks must not be empty");
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_config(text, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

}  // namespace cbot
