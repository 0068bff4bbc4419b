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

#include "tse/adaptation.hpp"
#include "tse/event_bank.hpp"
#include "tse/metrics.hpp"
#include "tse/model.hpp"
#include "tse/scene.hpp"
#include "tse/training.hpp"

namespace tse {

struct RunPaths {
  std::string data_dir = "data";
  std::string runs_dir = "runs";
};

struct DatasetSizes {
  int train = 600;
  int dev = 100;
  int test = 100;
  int new_class_test = 50;
  // Event counts of train/dev and seen-class test scenes; new-class test
  // scenes use scene.n_events.
  int train_events = 2;
  int test_events = 2;
  // Share of each class's clips reserved for test mixtures.
  double test_clip_fraction = 1.0 / 3.0;
};

// Merged configuration for every subcommand. Sub-module seeds are not
// configurable on their own: they are derived from `seed` by
// apply_master_seed so one number reproduces a run.
struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  BankSpec bank = default_bank_spec(24);
  GeneratorConfig scene;
  ModelConfig model = ModelConfig::toy();
  TrainingConfig training;
  AdaptationConfig adaptation;
  MetricConfig metric;
  DatasetSizes sizes;
  // Classes excluded from training and used as new classes.
  std::vector<std::string> held_out;
  RunPaths paths;

  void apply_master_seed();
  void validate() const;
};

// Overlays the JSON object in `text` onto `base`. Unknown keys and type
// errors throw kConfig naming the dotted key.
RunConfig parse_run_config(const std::string& text, const RunConfig& base = {});
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});
std::string run_config_to_json(const RunConfig& cfg);

// "section.key=value"; the value is read as JSON when it parses, otherwise
// as a string.
void apply_override(RunConfig& cfg, const std::string& assignment);

// TSE_DATA_DIR and TSE_RUNS_DIR replace the path entries when set.
void apply_path_environment(RunConfig& cfg);

}  // namespace tse
