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
#include <string>
#include <vector>

#include "tse/event_bank.hpp"
#include "tse/model.hpp"
#include "tse/scene.hpp"

namespace tse::testing {

// Bank spec with the first `classes` default recipes and short clips.
inline BankSpec small_spec(int classes, int clips, std::uint64_t seed = 3) {
  BankSpec spec = default_bank_spec(clips, seed);
  spec.classes.resize(static_cast<std::size_t>(classes));
  spec.noise.count = 3;
  return spec;
}

inline GeneratorConfig short_scenes(int n_events, std::uint64_t seed = 7) {
  GeneratorConfig g;
  g.n_events = n_events;
  g.duration_s = 1.0;
  g.clip_min_s = 0.3;
  g.clip_max_s = 0.6;
  g.master_seed = seed;
  return g;
}

inline BankSpec short_clip_spec(int classes, int clips, std::uint64_t seed = 3) {
  BankSpec spec = small_spec(classes, clips, seed);
  spec.clip_min_s = 0.8;
  spec.clip_max_s = 1.0;
  spec.noise.duration_s = 1.0;
  return spec;
}

inline std::vector<std::string> labels_of(const BankSpec& spec) {
  std::vector<std::string> out;
  for (const auto& c : spec.classes) out.push_back(c.label);
  return out;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("tse_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace tse::testing
