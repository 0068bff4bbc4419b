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

#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tse/checkpoint.hpp"
#include "tse/embedding.hpp"
#include "tse/error.hpp"

namespace tse {
namespace {

Model<float> small_model(std::uint64_t seed = 1) {
  return init_model<float>(ModelConfig::micro(), ClassVocabulary({"a", "b", "c"}), seed);
}

CheckpointMeta meta() {
  CheckpointMeta m;
  m.mode = "mixed_el";
  m.epoch = 7;
  m.dev_loss = -12.5;
  m.seed = 99;
  m.notes["k"] = "v";
  return m;
}

TEST(Checkpoint, RoundTripIsExact) {
  testing::TempDir t("ckpt_rt");
  Model<float> m = small_model();
  m.embeddings.set_trainable(1, false);
  save_checkpoint(t.path / "m.ckpt", m, meta());
  const Checkpoint c = load_checkpoint(t.path / "m.ckpt");
  EXPECT_EQ(c.meta, meta());
  EXPECT_EQ(c.model.config, m.config);
  EXPECT_EQ(c.model.vocabulary, m.vocabulary);
  EXPECT_EQ(c.model.extractor.tensors(), m.extractor.tensors());
  EXPECT_EQ(c.model.enroller.tensors(), m.enroller.tensors());
  EXPECT_EQ(c.model.embeddings.values(), m.embeddings.values());
  EXPECT_EQ(c.model.embeddings.trainable_flags(), m.embeddings.trainable_flags());
  save_checkpoint(t.path / "again.ckpt", c.model, c.meta);
  const CheckpointDiff d = diff_checkpoints(t.path / "m.ckpt", t.path / "again.ckpt");
  EXPECT_TRUE(d.header_identical);
  EXPECT_TRUE(d.header_changes.empty());
  EXPECT_TRUE(d.only_new_columns_changed());
}

TEST(Checkpoint, RejectsCorruptFiles) {
  testing::TempDir t("ckpt_bad");
  save_checkpoint(t.path / "m.ckpt", small_model(), meta());
  std::ifstream in(t.path / "m.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  {
    std::ofstream out(t.path / "trunc.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 10);
  }
  EXPECT_THROW(load_checkpoint(t.path / "trunc.ckpt"), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  {
    std::ofstream out(t.path / "magic.ckpt", std::ios::binary);
    out << bad;
  }
  EXPECT_THROW(load_checkpoint(t.path / "magic.ckpt"), Error);
  EXPECT_THROW(load_checkpoint(t.path / "missing.ckpt"), Error);
}

TEST(Checkpoint, DiffLocalisesChanges) {
  testing::TempDir t("ckpt_diff");
  const Model<float> m = small_model();
  save_checkpoint(t.path / "base.ckpt", m, meta());

  Model<float> ext = m;
  ext.extractor.at("ext.decoder.weight")(0, 0) += 1.0f;
  save_checkpoint(t.path / "ext.ckpt", ext, meta());
  CheckpointDiff d = diff_checkpoints(t.path / "base.ckpt", t.path / "ext.ckpt");
  EXPECT_EQ(d.changed_tensors, std::vector<std::string>{"ext/ext.decoder.weight"});
  EXPECT_FALSE(d.only_new_columns_changed());

  Model<float> col = m;
  col.embeddings.mutable_values()(2, 1) += 0.5f;
  save_checkpoint(t.path / "col.ckpt", col, meta());
  d = diff_checkpoints(t.path / "base.ckpt", t.path / "col.ckpt");
  EXPECT_EQ(d.changed_columns, std::vector<std::size_t>{1});
  EXPECT_TRUE(d.changed_tensors.empty());
  EXPECT_FALSE(d.only_new_columns_changed());

  auto reg = register_class(m.embeddings, m.vocabulary, "d", Vec<float>::Ones(m.config.embed_dim));
  Model<float> grown = m;
  grown.embeddings = reg.matrix;
  grown.vocabulary = reg.vocabulary;
  CheckpointMeta later = meta();
  later.notes["adapted"] = "yes";
  save_checkpoint(t.path / "grown.ckpt", grown, later);
  d = diff_checkpoints(t.path / "base.ckpt", t.path / "grown.ckpt");
  EXPECT_TRUE(d.only_new_columns_changed());
  EXPECT_EQ(d.columns_before, 3u);
  EXPECT_EQ(d.columns_after, 4u);
  const std::set<std::string> allowed = {"metadata", "trainable_columns", "vocabulary"};
  for (const auto& h : d.header_changes) EXPECT_TRUE(allowed.count(h)) << h;
  EXPECT_FALSE(format_diff(d).empty());
}

TEST(Checkpoint, ModelConfigJsonRoundTrip) {
  for (const ModelConfig& c : {ModelConfig::micro(), ModelConfig::toy(), ModelConfig::full_scale()}) {
    EXPECT_EQ(model_config_from_json(model_config_to_json(c)), c);
  }
  EXPECT_THROW(model_config_from_json(R"({"enc_filters": 8, "mystery": 1})"), Error);
}

}  // namespace
}  // namespace tse
