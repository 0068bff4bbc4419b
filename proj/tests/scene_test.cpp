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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tse/error.hpp"
#include "tse/metrics.hpp"
#include "tse/scene.hpp"

namespace tse {
namespace {

using testing::labels_of;
using testing::short_scenes;
using testing::small_spec;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class SceneTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new BankSpec(small_spec(4, 10));
    bank_ = new EventBank(build_event_bank(*spec_));
    noise_ = new EventBank(build_noise_bank(*spec_));
  }
  static void TearDownTestSuite() {
    delete spec_;
    delete bank_;
    delete noise_;
  }
  static BankSpec* spec_;
  static EventBank* bank_;
  static EventBank* noise_;
};
BankSpec* SceneTest::spec_ = nullptr;
EventBank* SceneTest::bank_ = nullptr;
EventBank* SceneTest::noise_ = nullptr;

TEST_F(SceneTest, BankCountsAndLabels) {
  EXPECT_EQ(bank_->size(), 40u);
  EXPECT_EQ(bank_->labels(), labels_of(*spec_));
  std::set<std::string> ids;
  for (const auto& c : bank_->clips()) {
    ids.insert(c.source_id);
    EXPECT_GE(c.waveform.duration_s(), spec_->clip_min_s - 1e-9);
    EXPECT_LE(c.waveform.duration_s(), spec_->clip_max_s + 1e-9);
    EXPECT_NEAR(std::sqrt(c.waveform.power()), 0.1, 1e-9);
  }
  EXPECT_EQ(ids.size(), 40u);
  EXPECT_EQ(noise_->size(), 3u);
}

TEST_F(SceneTest, BankIsDeterministic) {
  const EventBank again = build_event_bank(*spec_);
  ASSERT_EQ(again.size(), bank_->size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again.clips()[i].waveform, bank_->clips()[i].waveform);
    EXPECT_EQ(again.clips()[i].source_id, bank_->clips()[i].source_id);
  }
  BankSpec other = *spec_;
  other.seed += 1;
  EXPECT_NE(build_event_bank(other).clips()[0].waveform, bank_->clips()[0].waveform);
}

TEST_F(SceneTest, BankRejectsSingleClipClass) {
  BankSpec bad = *spec_;
  bad.classes[1].count = 1;
  EXPECT_THROW(build_event_bank(bad), Error);
}

TEST_F(SceneTest, BankSpecJsonRoundTrip) {
  const BankSpec back = parse_bank_spec(bank_spec_to_json(*spec_));
  EXPECT_EQ(bank_spec_to_json(back), bank_spec_to_json(*spec_));
  EXPECT_THROW(parse_bank_spec(R"({"seed": 1, "colour": 3})"), Error);
}

TEST_F(SceneTest, GenerateSceneContract) {
  const GeneratorConfig g = short_scenes(3);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const RenderedScene a = generate_scene(*bank_, *noise_, g, s);
    const auto& m = a.manifest;
    ASSERT_EQ(m.events.size(), 3u);
    std::set<std::string> classes;
    int target_hits = 0;
    for (const auto& e : m.events) {
      classes.insert(e.class_label);
      EXPECT_GE(e.onset_s, 0.0);
      EXPECT_LE(e.onset_s + e.excerpt_len_s, m.duration_s + 1e-12);
      EXPECT_GE(e.excerpt_len_s, g.clip_min_s - 1e-9);
      EXPECT_LE(e.excerpt_len_s, g.clip_max_s + 1e-9);
      target_hits += e.class_label == m.target_class;
    }
    EXPECT_EQ(classes.size(), 3u);
    EXPECT_EQ(target_hits, 1);
    EXPECT_GE(m.noise_snr_db, 15.0);
    EXPECT_LE(m.noise_snr_db, 25.0);

    // Mixture is exactly the left-to-right sum of stems and noise.
    std::vector<Waveform> parts = a.stems;
    parts.push_back(a.noise);
    EXPECT_EQ(mix(parts), a.mixture);
    const Waveform events = mix(a.stems);
    EXPECT_NEAR(snr_db(events.power(), a.noise.power()), m.noise_snr_db, 1e-6);

    const RenderedScene b = generate_scene(*bank_, *noise_, g, s);
    EXPECT_EQ(b.manifest, m);
    EXPECT_EQ(b.mixture, a.mixture);
    const RenderedScene c = render_scene(manifest_from_json(manifest_to_json(m)), *bank_, *noise_,
                                         g.sample_rate_hz);
    EXPECT_EQ(c.mixture, a.mixture);
    EXPECT_EQ(c.stems, a.stems);
  }
}

TEST_F(SceneTest, TooFewClassesIsError) {
  GeneratorConfig g = short_scenes(5);
  EXPECT_THROW(generate_scene(*bank_, *noise_, g, 1), Error);
}

TEST_F(SceneTest, ManifestJsonHasExactFields) {
  const auto m = generate_scene(*bank_, *noise_, short_scenes(2), 4).manifest;
  const std::string line = manifest_to_json(m);
  for (const char* key : {"scene_id", "duration_s", "events", "source_id", "class_label",
                          "onset_s", "excerpt_start_s", "excerpt_len_s", "gain",
                          "noise_source_id", "noise_snr_db", "target_class", "seed"}) {
    EXPECT_NE(line.find(std::string("\"") + key + "\""), std::string::npos) << key;
  }
  EXPECT_EQ(manifest_from_json(line), m);
  EXPECT_THROW(manifest_from_json(R"({"scene_id": "x"})"), Error);
}

TEST_F(SceneTest, ForcedClassConstraint) {
  SceneConstraints c;
  c.class_pool = {"harmonic_synth", "chirp_synth", "burst_synth"};
  c.forced_class = "hum_synth";
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = sample_manifest(*bank_, *noise_, short_scenes(3), s, c);
    EXPECT_EQ(m.target_class, "hum_synth");
    int seen = 0, fresh = 0;
    for (const auto& e : m.events) {
      if (e.class_label == "hum_synth") {
        ++fresh;
      } else {
        ++seen;
        EXPECT_NE(std::find(c.class_pool.begin(), c.class_pool.end(), e.class_label),
                  c.class_pool.end());
      }
    }
    EXPECT_EQ(seen, 2);
    EXPECT_EQ(fresh, 1);
  }
}

TEST_F(SceneTest, PickEnrollment) {
  const auto clips = bank_->clips_of("chirp_synth");
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto picked = pick_enrollment_clips(*bank_, "chirp_synth", clips[0]->source_id, 5, s);
    ASSERT_EQ(picked.size(), 5u);
    std::set<std::string> ids;
    for (const auto* c : picked) {
      EXPECT_NE(c->source_id, clips[0]->source_id);
      EXPECT_EQ(c->class_label, "chirp_synth");
      ids.insert(c->source_id);
    }
    EXPECT_EQ(ids.size(), 5u);
    const auto again = pick_enrollment_clips(*bank_, "chirp_synth", clips[0]->source_id, 5, s);
    EXPECT_EQ(again, picked);
  }
  EXPECT_THROW(pick_enrollment(*bank_, "chirp_synth", clips[0]->source_id, 10, 1), Error);
  EXPECT_THROW(pick_enrollment(*bank_, "nope", "", 1, 1), Error);
}

TEST_F(SceneTest, PickEnrollmentForcedChoice) {
  BankSpec two = small_spec(3, 2);
  const EventBank b = build_event_bank(two);
  const auto clips = b.clips_of("chirp_synth");
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto one = pick_enrollment(b, "chirp_synth", clips[0]->source_id, 1, s);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], clips[1]->waveform);
  }
}

TEST_F(SceneTest, DatasetCountsAndDeterminism) {
  testing::TempDir a("dataset_a"), b("dataset_b");
  const GeneratorConfig g = short_scenes(2);
  DatasetWriteOptions w;
  w.workers = 2;
  generate_dataset(*bank_, *noise_, g, 10, "train", a.path, {}, w);
  generate_dataset(*bank_, *noise_, g, 10, "train", b.path, {}, {});
  const auto ma = read_manifest(a.path / "train" / "manifest.jsonl");
  ASSERT_EQ(ma.size(), 10u);
  EXPECT_EQ(slurp(a.path / "train" / "manifest.jsonl"), slurp(b.path / "train" / "manifest.jsonl"));
  int mixtures = 0;
  for (const auto& m : ma) {
    const auto dir = a.path / "train" / m.scene_id;
    mixtures += std::filesystem::exists(dir / "mixture.wav");
    EXPECT_TRUE(std::filesystem::exists(dir / "target.wav"));
    EXPECT_TRUE(std::filesystem::exists(dir / "noise.wav"));
    EXPECT_TRUE(std::filesystem::exists(dir / "stem_1.wav"));
    const RenderedScene s = load_scene(m, a.path / "train");
    const RenderedScene r = render_scene(m, *bank_, *noise_, g.sample_rate_hz);
    ASSERT_EQ(s.mixture.size(), r.mixture.size());
    for (std::size_t i = 0; i < r.mixture.size(); ++i) {
      ASSERT_EQ(s.mixture[i], static_cast<double>(static_cast<float>(r.mixture[i])));
    }
  }
  EXPECT_EQ(mixtures, 10);
}

TEST_F(SceneTest, ScenesSeededByIndexNotOrder) {
  const GeneratorConfig g = short_scenes(2);
  const auto serial = generate_scenes(*bank_, *noise_, g, 12, "dev", {}, 1);
  const auto parallel = generate_scenes(*bank_, *noise_, g, 12, "dev", {}, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(serial[i].manifest, parallel[i].manifest);
    EXPECT_EQ(serial[i].mixture, parallel[i].mixture);
    EXPECT_EQ(serial[i].manifest.seed, scene_seed(g.master_seed, "dev", i));
    EXPECT_EQ(serial[i].manifest.scene_id, scene_id("dev", i));
  }
  EXPECT_NE(scene_seed(1, "dev", 0), scene_seed(1, "test", 0));
}

TEST_F(SceneTest, UnwritableOutputIsError) {
  testing::TempDir t("dataset_ro");
  const auto blocker = t.path / "file";
  std::ofstream(blocker) << "x";
  EXPECT_THROW(generate_dataset(*bank_, *noise_, short_scenes(2), 1, "train", blocker / "sub"),
               std::exception);
}

TEST(ClassDirLoader, ReadsOneClassPerFolder) {
  testing::TempDir t("bankdir");
  for (const char* label : {"a", "b"}) {
    std::filesystem::create_directories(t.path / label);
    for (int i = 0; i < 2; ++i) {
      write_wav(t.path / label / (std::to_string(i) + ".wav"),
                Waveform(std::vector<double>(100, 0.1 * (i + 1)), 8000));
    }
  }
  const EventBank b = load_event_bank_dir(t.path, 8000);
  EXPECT_EQ(b.size(), 4u);
  EXPECT_TRUE(b.has_class("a"));
  EXPECT_THROW(load_event_bank_dir(t.path, 16000), Error);
}

}  // namespace
}  // namespace tse
