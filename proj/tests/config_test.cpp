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

#include <cstdlib>

#include <gtest/gtest.h>

#include "tse/config.hpp"
#include "tse/error.hpp"
#include "tse/experiment.hpp"

namespace tse {
namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text).validate();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

TEST(RunConfig, EmptyDocumentGivesDefaults) {
  RunConfig d;
  d.apply_master_seed();
  const RunConfig c = parse_run_config("{}");
  EXPECT_EQ(run_config_to_json(c), run_config_to_json(d));
  EXPECT_EQ(c.model, ModelConfig::toy());
  EXPECT_EQ(c.sizes.train, 600);
  EXPECT_EQ(c.training.mode, TrainingMode::kMixedEl);
}

TEST(RunConfig, UnknownKeysAreRejectedWithPath) {
  EXPECT_NE(config_error(R"({"trainng": {}})").find("trainng"), std::string::npos);
  EXPECT_NE(config_error(R"({"training": {"lr": 1e-3, "lr_decay": 0.5}})").find("training.lr_decay"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"model": {"hidden": 3}})").find("model.hidden"), std::string::npos);
  EXPECT_NE(config_error(R"({"scene": {"snr": 3}})").find("scene.snr"), std::string::npos);
}

TEST(RunConfig, TypeAndRangeErrorsNameTheField) {
  EXPECT_NE(config_error(R"({"training": {"lr": "fast"}})").find("training.lr"), std::string::npos);
  EXPECT_NE(config_error(R"({"training": {"lr": -1}})").find("training.lr"), std::string::npos);
  EXPECT_NE(config_error(R"({"training": {"mode": "both"}})").find("both"), std::string::npos);
  EXPECT_NE(config_error(R"({"workers": 0})").find("workers"), std::string::npos);
  EXPECT_FALSE(config_error("{not json").empty());
  EXPECT_FALSE(config_error(R"({"held_out": ["no_such_class"]})").empty());
}

TEST(RunConfig, SubSeedsComeFromTheMasterSeed) {
  EXPECT_FALSE(config_error(R"({"bank": {"seed": 4}})").empty());
  const RunConfig a = parse_run_config(R"({"seed": 1})");
  const RunConfig b = parse_run_config(R"({"seed": 2})");
  EXPECT_NE(a.bank.seed, b.bank.seed);
  EXPECT_NE(a.scene.master_seed, b.scene.master_seed);
  EXPECT_NE(a.training.seed, b.training.seed);
  EXPECT_NE(a.adaptation.seed, b.adaptation.seed);
  EXPECT_EQ(a.training.seed, parse_run_config(R"({"seed": 1})").training.seed);
}

TEST(RunConfig, EchoedConfigReproducesItself) {
  RunConfig c = parse_run_config(
      R"({"seed": 5, "held_out": ["siren_synth"], "training": {"lr": 0.001, "mode": "mixed"},
          "sizes": {"train": 10}, "metric": {"sdr_cap_db": 50}})");
  const std::string echoed = run_config_to_json(c);
  EXPECT_EQ(run_config_to_json(parse_run_config(echoed)), echoed);
  EXPECT_EQ(c.training.metric.sdr_cap_db, 50.0);
  EXPECT_EQ(c.adaptation.metric.sdr_cap_db, 50.0);
}

TEST(RunConfig, OverridesTakePrecedence) {
  RunConfig c = parse_run_config(R"({"training": {"lr": 0.01}})");
  apply_override(c, "training.lr=0.002");
  EXPECT_EQ(c.training.lr, 0.002);
  apply_override(c, "training.mode=one_hot");
  EXPECT_EQ(c.training.mode, TrainingMode::kOneHot);
  apply_override(c, "seed=9");
  EXPECT_EQ(c.training.seed, parse_run_config(R"({"seed": 9})").training.seed);
  EXPECT_THROW(apply_override(c, "training.nope=1"), Error);
  EXPECT_THROW(apply_override(c, "no_equals_sign"), Error);
}

TEST(RunConfig, PathEnvironmentOverrides) {
  RunConfig c;
  ::setenv("TSE_DATA_DIR", "/tmp/tse_data_env", 1);
  ::setenv("TSE_RUNS_DIR", "/tmp/tse_runs_env", 1);
  apply_path_environment(c);
  EXPECT_EQ(c.paths.data_dir, "/tmp/tse_data_env");
  EXPECT_EQ(c.paths.runs_dir, "/tmp/tse_runs_env");
  ::unsetenv("TSE_DATA_DIR");
  ::unsetenv("TSE_RUNS_DIR");
}

TEST(Experiment, PartitionsAndHeldOutShots) {
  RunConfig c = parse_run_config(R"({"held_out": ["chirp_synth"],
      "sizes": {"train": 3, "dev": 2, "test": 2, "new_class_test": 2}})");
  c.bank = default_bank_spec(9);
  c.bank.classes.resize(3);
  c.bank.noise.count = 2;
  c.scene.duration_s = 1.0;
  c.scene.clip_min_s = 0.3;
  c.scene.clip_max_s = 0.6;
  c.scene.n_events = 3;
  c.validate();
  const Experiment ex = prepare_experiment(c);
  EXPECT_EQ(ex.seen, (std::vector<std::string>{c.bank.classes[0].label, c.bank.classes[2].label}));
  EXPECT_EQ(ex.train_bank.size(), 12u);
  EXPECT_EQ(ex.test_bank.size(), 9u);
  ASSERT_EQ(ex.shots.size(), 1u);
  EXPECT_EQ(ex.shots[0].shots.size(), 5u);
  for (const auto& clip : ex.test_bank.clips()) EXPECT_FALSE(ex.train_bank.contains(clip.source_id));
  for (const auto& s : ex.shots[0].shots) EXPECT_FALSE(ex.test_bank.contains(s.source_id));
  for (const auto& s : make_split(ex, c, "new_test")) {
    EXPECT_EQ(s.manifest.target_class, "chirp_synth");
    EXPECT_EQ(s.manifest.events.size(), 3u);
  }
  for (const auto& s : make_split(ex, c, "train")) {
    EXPECT_EQ(s.manifest.events.size(), 2u);
    for (const auto& e : s.manifest.events) EXPECT_NE(e.class_label, "chirp_synth");
  }
  EXPECT_THROW(split_size(c, "validation"), Error);
}

}  // namespace
}  // namespace tse
