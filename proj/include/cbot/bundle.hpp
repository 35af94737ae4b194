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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "cbot/config.hpp"
#include "cbot/engine.hpp"

// Model bundle: one JSON document per model plus a manifest carrying the
// schema version, domain fingerprint and FNV-1a checksums of the training
// inputs and of every bundle file. Saving is deterministic byte for byte.
namespace cbot {

inline constexpr int kBundleSchemaVersion = 1;

struct BundleManifest {
  int schema_version = kBundleSchemaVersion;
  std::uint64_t domain_fingerprint = 0;
  std::map<std::string, std::uint64_t> training_data;
  std::map<std::string, std::uint64_t> files;
};

void save_bundle(const Engine& engine, const PipelineConfig& config,
                 const std::map<std::string, std::uint64_t>& training_checksums, const std::filesystem::path& dir);

struct LoadedBundle {
  Engine engine;
  BundleManifest manifest;
  std::uint64_t seed = 0;  // global seed of the training config
};

// Throws ModelError on a missing file, checksum mismatch, unknown schema
// version or inconsistent fingerprints.
LoadedBundle load_bundle(const std::filesystem::path& dir);

}  // namespace cbot
