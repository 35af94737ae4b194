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

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "cbot/config.hpp"
#include "cbot/pipeline.hpp"

namespace cbot::testing {

inline std::filesystem::path data_dir() { return CBOT_DATA_DIR; }

inline PipelineConfig bundled_config() { return load_config(data_dir() / "chatbot.toml"); }

// Bundled corpus trained once per process.
struct Bundled {
  PipelineConfig config;
  TrainingData data;
  TrainedEngine trained;
};

inline const Bundled& bundled() {
  static const Bundled b = [] {
    Bundled out;
    out.config = bundled_config();
    out.data = load_training_data(out.config);
    out.trained = train_engine(out.data, out.config);
    return out;
  }();
  return b;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cbot-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cbot::testing
