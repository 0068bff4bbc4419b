// Copyright 2026 The tse Authors
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
#include <vector>

#include "tse/model.hpp"

namespace tse {

struct CheckpointMeta {
  std::string mode;
  int epoch = -1;
  double dev_loss = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> notes;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  Model<float> model;
  CheckpointMeta meta;
};

// Layout: 8-byte magic, u32 format version, u64 header length, JSON header
// (config, vocabulary, metadata, tensor directory), then raw little-endian
// float32 tensors in directory order. The embedding matrix is stored last
// and column-major, so appending classes leaves every earlier byte in place.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Byte comparison of two checkpoint files, resolved to tensors and, for the
// embedding matrix, to columns.
struct CheckpointDiff {
  bool header_identical = true;
  // Top-level header entries whose JSON differs (e.g. "metadata").
  std::vector<std::string> header_changes;
  std::vector<std::string> changed_tensors;
  std::vector<std::string> missing_tensors;  // present in only one file
  std::vector<std::size_t> changed_columns;  // shared embedding columns
  std::size_t columns_before = 0;
  std::size_t columns_after = 0;

  bool only_new_columns_changed() const {
    return changed_tensors.empty() && missing_tensors.empty() && changed_columns.empty();
  }
};

CheckpointDiff diff_checkpoints(const std::filesystem::path& before,
                                const std::filesystem::path& after);
std::string format_diff(const CheckpointDiff& diff);

}  // namespace tse
