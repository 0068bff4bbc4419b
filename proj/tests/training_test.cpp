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

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tse/conditioning.hpp"
#include "tse/error.hpp"
#include "tse/metrics.hpp"
#include "tse/network.hpp"
#include "tse/rng.hpp"
#include "tse/training.hpp"

namespace tse {
namespace {

class TrainingTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const BankSpec spec = testing::small_spec(4, 6);
    bank_ = new EventBank(build_event_bank(spec));
    noise_ = new EventBank(build_noise_bank(spec));
    vocab_ = new ClassVocabulary(bank_->labels());
    scenes_ = new std::vector<RenderedScene>(
        generate_scenes(*bank_, *noise_, testing::short_scenes(3), 6, "train"));
  }
  static void TearDownTestSuite() {
    delete bank_;
    delete noise_;
    delete vocab_;
    delete scenes_;
  }
  static std::vector<TrainingExample> examples(std::uint64_t seed = 1) {
    return make_examples(*scenes_, *bank_, *vocab_, seed);
  }
  static ModelConfig tiny() {
    ModelConfig c = ModelConfig::micro();
    c.repeats = 2;
    return c;
  }
  static EventBank* bank_;
  static EventBank* noise_;
  static ClassVocabulary* vocab_;
  static std::vector<RenderedScene>* scenes_;
};
EventBank* TrainingTest::bank_ = nullptr;
EventBank* TrainingTest::noise_ = nullptr;
ClassVocabulary* TrainingTest::vocab_ = nullptr;
std::vector<RenderedScene>* TrainingTest::scenes_ = nullptr;

TEST(TrainingEnums, RoundTrip) {
  for (auto m : {TrainingMode::kOneHot, TrainingMode::kEnrollment, TrainingMode::kMixed,
                 TrainingMode::kMixedEl}) {
    EXPECT_EQ(parse_training_mode(to_string(m)), m);
  }
  EXPECT_EQ(to_string(TrainingMode::kMixedEl), "mixed_el");
  EXPECT_THROW(parse_training_mode("both"), Error);
  EXPECT_EQ(parse_branch_schedule("alternate"), BranchSchedule::kAlternate);
  EXPECT_TRUE(uses_one_hot(TrainingMode::kMixed));
  EXPECT_FALSE(uses_one_hot(TrainingMode::kEnrollment));
  EXPECT_FALSE(uses_enrollment(TrainingMode::kOneHot));
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  EXPECT_EQ(c.alpha, 3.0);
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_NO_THROW(c.validate());
  c.lr = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.alpha = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Branches, JointAndAlternate) {
  TrainingConfig c;
  const BranchMask j = branches_for(c, 3);
  EXPECT_TRUE(j.one_hot && j.enrollment);
  c.branch_schedule = BranchSchedule::kAlternate;
  const BranchMask a0 = branches_for(c, 0), a1 = branches_for(c, 1);
  EXPECT_NE(a0.one_hot, a1.one_hot);
  EXPECT_NE(a0.enrollment, a0.one_hot);
}

TEST_F(TrainingTest, SelectTargetIsUniformOverEvents) {
  const RenderedScene& scene = (*scenes_)[0];
  std::map<std::string, int> hits;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const TrainingExample ex = select_target(scene, *bank_, *vocab_, derive_seed(99, {s}));
    ++hits[vocab_->label(ex.target_class_index)];
    ASSERT_NE(ex.enrollment_source_id, ex.target_source_id);
    ASSERT_EQ(bank_->find(ex.enrollment_source_id).class_label,
              vocab_->label(ex.target_class_index));
  }
  ASSERT_EQ(hits.size(), 3u);
  for (const auto& [label, n] : hits) {
    const double f = n / 3000.0;
    EXPECT_GE(f, 0.30) << label;
    EXPECT_LE(f, 0.37) << label;
  }
}

TEST_F(TrainingTest, ReferencePlusInterferenceIsMixture) {
  const auto all = examples();
  for (std::size_t s = 0; s < all.size(); ++s) {
    const TrainingExample& ex = all[s];
    const RenderedScene& scene = (*scenes_)[s];
    ASSERT_EQ(ex.scene_id, scene.manifest.scene_id);
    EXPECT_EQ(ex.mixture, scene.mixture);
    // The target is one stem; the others plus noise are the interference.
    int matches = 0;
    std::vector<double> interference = to_scalar<double>(scene.noise.samples());
    for (const auto& stem : scene.stems) {
      if (stem == ex.target_stem && matches++ == 0) continue;
      for (std::size_t i = 0; i < stem.size(); ++i) interference[i] += stem[i];
    }
    ASSERT_EQ(matches, 1);
    for (std::size_t i = 0; i < ex.mixture.size(); ++i) {
      ASSERT_NEAR(ex.target_stem[i] + interference[i], ex.mixture[i], 1e-12);
    }
  }
}

TEST_F(TrainingTest, SelectTargetNeedsStems) {
  RenderedScene s = (*scenes_)[0];
  s.stems.clear();
  EXPECT_THROW(select_target(s, *bank_, *vocab_, 1), Error);
}

// Saturated mask: the network output no longer depends on the embedding.
Model<double> saturated(const ModelConfig& cfg, const ClassVocabulary& vocab) {
  Model<double> m = init_model<double>(cfg, vocab, 4);
  m.extractor.at("ext.mask.conv.weight").setZero();
  m.extractor.at("ext.mask.conv.bias").setConstant(100.0);
  return m;
}

TEST_F(TrainingTest, StubbedPerfectExtractionComposition) {
  Model<double> m = saturated(tiny(), *vocab_);
  std::vector<TrainingExample> batch = {examples()[0]};
  TrainingExample& ex = batch[0];
  const ExtractionNet<double> net(m.config, m.extractor);
  const auto y = to_scalar<double>(ex.mixture.samples());
  const auto out = net.extract(y, m.embeddings.column(0));
  ex.target_stem = Waveform(out, ex.mixture.sample_rate());
  // Make the 1-hot column orthogonal to the enrollment embedding.
  const Vec<double> u = encode_enrollment(m, ex.enrollment);
  Vec<double> v = Vec<double>::Random(u.size());
  v -= (v.dot(u) / u.dot(u)) * u;
  m.embeddings.mutable_values().col(ex.target_class_index) = v;

  TrainingConfig cfg;
  const LossReport r = compute_loss(m, std::span<const TrainingExample>(batch), cfg, {}, nullptr);
  const double floor = -10.0 * std::log10(1.0 / cfg.metric.eps);
  EXPECT_DOUBLE_EQ(r.l_ext_enrl, floor);
  EXPECT_DOUBLE_EQ(r.l_ext_onehot, floor);
  EXPECT_NEAR(r.l_emb, 1.0, 1e-12);
  EXPECT_NEAR(r.total, 2 * floor + 3.0, 1e-10);
}

TEST_F(TrainingTest, IdenticalEmbeddingsGiveZeroEmbeddingLoss) {
  Model<double> m = init_model<double>(tiny(), *vocab_, 5);
  std::vector<TrainingExample> batch = {examples()[1]};
  m.embeddings.mutable_values().col(batch[0].target_class_index) =
      encode_enrollment(m, batch[0].enrollment);
  TrainingConfig cfg;
  const LossReport r = compute_loss(m, std::span<const TrainingExample>(batch), cfg, {}, nullptr);
  EXPECT_NEAR(r.l_emb, 0.0, 1e-12);
  EXPECT_NEAR(r.l_ext_enrl, r.l_ext_onehot, 1e-9);
  EXPECT_NEAR(r.total, r.l_ext_enrl + r.l_ext_onehot, 1e-11);
}

TEST_F(TrainingTest, ModesSelectLossTerms) {
  const Model<double> m = init_model<double>(tiny(), *vocab_, 6);
  const auto ex = examples();
  const std::span<const TrainingExample> batch(ex.data(), 3);
  TrainingConfig cfg;
  cfg.mode = TrainingMode::kOneHot;
  LossReport r = compute_loss(m, batch, cfg, {}, nullptr);
  EXPECT_EQ(r.l_ext_enrl, 0.0);
  EXPECT_EQ(r.l_emb, 0.0);
  EXPECT_EQ(r.total, r.l_ext_onehot);
  cfg.mode = TrainingMode::kEnrollment;
  r = compute_loss(m, batch, cfg, {}, nullptr);
  EXPECT_EQ(r.l_ext_onehot, 0.0);
  EXPECT_EQ(r.total, r.l_ext_enrl);
  cfg.mode = TrainingMode::kMixed;
  r = compute_loss(m, batch, cfg, {}, nullptr);
  EXPECT_EQ(r.l_emb, 0.0);
  EXPECT_EQ(r.total, r.l_ext_enrl + r.l_ext_onehot);
  cfg.mode = TrainingMode::kMixedEl;
  r = compute_loss(m, batch, cfg, {}, nullptr);
  EXPECT_GT(r.l_emb, 0.0);
  EXPECT_EQ(r.total, r.l_ext_enrl + r.l_ext_onehot + 3.0 * r.l_emb);
}

TEST_F(TrainingTest, MissingEnrollmentIsError) {
  const Model<double> m = init_model<double>(tiny(), *vocab_, 7);
  std::vector<TrainingExample> batch = {examples()[0]};
  batch[0].enrollment = Waveform();
  TrainingConfig cfg;
  for (auto mode : {TrainingMode::kEnrollment, TrainingMode::kMixed, TrainingMode::kMixedEl}) {
    cfg.mode = mode;
    EXPECT_THROW(compute_loss(m, std::span<const TrainingExample>(batch), cfg, {}, nullptr), Error);
  }
  cfg.mode = TrainingMode::kOneHot;
  EXPECT_NO_THROW(compute_loss(m, std::span<const TrainingExample>(batch), cfg, {}, nullptr));
}

TEST_F(TrainingTest, LossRecomposesFromIndependentTerms) {
  const Model<double> m = init_model<double>(tiny(), *vocab_, 8);
  const auto ex = examples(3);
  TrainingConfig cfg;
  const LossReport r = compute_loss(m, std::span<const TrainingExample>(ex), cfg, {}, nullptr);
  const ExtractionNet<double> net(m.config, m.extractor);
  double enrl = 0, onehot = 0, emb = 0;
  for (const auto& e : ex) {
    const auto y = to_scalar<double>(e.mixture.samples());
    const Vec<double> u = encode_enrollment(m, e.enrollment);
    const Vec<double> v = m.embeddings.column(e.target_class_index);
    const std::vector<double> x(e.target_stem.samples().begin(), e.target_stem.samples().end());
    enrl += oracle::neg_snr(net.extract(y, u), x);
    onehot += oracle::neg_snr(net.extract(y, v), x);
    emb += oracle::cosine(std::vector<double>(u.data(), u.data() + u.size()),
                          std::vector<double>(v.data(), v.data() + v.size()));
  }
  const double n = static_cast<double>(ex.size());
  EXPECT_NEAR(r.l_ext_enrl, enrl / n, 1e-9);
  EXPECT_NEAR(r.l_ext_onehot, onehot / n, 1e-9);
  EXPECT_NEAR(r.l_emb, emb / n, 1e-12);
  EXPECT_EQ(r.total - r.l_ext_enrl - r.l_ext_onehot - 3.0 * r.l_emb, 0.0);
}

TEST_F(TrainingTest, GradientsMatchFiniteDifferences) {
  Model<double> m = init_model<double>(tiny(), *vocab_, 9);
  const auto all = examples(4);
  const std::vector<TrainingExample> batch(all.begin(), all.begin() + 2);
  TrainingConfig cfg;
  auto grads = ModelGrads<double>::zeros_like(m);
  compute_loss(m, std::span<const TrainingExample>(batch), cfg, {}, &grads);
  auto total = [&](const Model<double>& mm) {
    return compute_loss(mm, std::span<const TrainingExample>(batch), cfg, {}, nullptr).total;
  };
  // One-second inputs put many encoder ReLU kinks within a 1e-5 step.
  const double h = 1e-7;
  double worst = 0;
  auto check = [&](double analytic, double fd) {
    worst = std::max(worst, std::abs(analytic - fd) /
                                std::max({std::abs(analytic), std::abs(fd), 1e-7}));
  };
  for (const char* key : {"ext.encoder.weight", "ext.r1.b00.conv1.weight", "ext.decoder.weight"}) {
    for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(5)}) {
      Model<double> p = m, q = m;
      p.extractor.at(key).data()[i] += h;
      q.extractor.at(key).data()[i] -= h;
      check(grads.extractor.at(key).data()[i], (total(p) - total(q)) / (2 * h));
    }
  }
  for (const char* key : {"enr.encoder.weight", "enr.proj.bias"}) {
    Model<double> p = m, q = m;
    p.enroller.at(key).data()[1] += h;
    q.enroller.at(key).data()[1] -= h;
    check(grads.enroller.at(key).data()[1], (total(p) - total(q)) / (2 * h));
  }
  const auto col = static_cast<Eigen::Index>(batch[0].target_class_index);
  for (Eigen::Index d = 0; d < 3; ++d) {
    Model<double> p = m, q = m;
    p.embeddings.mutable_values()(d, col) += h;
    q.embeddings.mutable_values()(d, col) -= h;
    check(grads.embeddings(d, col), (total(p) - total(q)) / (2 * h));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Adam, FirstStepMovesByLearningRateAndHonoursMask) {
  Adam<double> adam;
  Mat<double> p = Mat<double>::Zero(2, 3);
  Mat<double> g(2, 3);
  g << 1, -2, 3, -4, 5, -6;
  const std::vector<bool> mask = {false, true, false};
  adam.update("w", p, g, 0.1, 1, &mask);
  EXPECT_EQ(p.col(0), Vec<double>::Zero(2));
  EXPECT_EQ(p.col(2), Vec<double>::Zero(2));
  EXPECT_NEAR(p(0, 1), 0.1, 1e-7);
  EXPECT_NEAR(p(1, 1), -0.1, 1e-7);
}

TEST_F(TrainingTest, ClipGlobalNorm) {
  Model<double> m = init_model<double>(tiny(), *vocab_, 10);
  auto grads = ModelGrads<double>::zeros_like(m);
  const auto ex = examples();
  compute_loss(m, std::span<const TrainingExample>(ex), TrainingConfig{}, {}, &grads);
  const double before = std::sqrt(grads.squared_norm());
  bool clipped = false;
  const double reported = clip_global_norm(grads, before / 4, &clipped);
  EXPECT_TRUE(clipped);
  EXPECT_NEAR(reported, before, 1e-9 * before);
  EXPECT_LE(std::sqrt(grads.squared_norm()), before / 4 + 1e-6);
  clip_global_norm(grads, 1e9, &clipped);
  EXPECT_FALSE(clipped);
}

TEST_F(TrainingTest, ClippingBoundHoldsOnEveryStep) {
  Model<float> m = init_model<float>(tiny(), *vocab_, 11);
  TrainingConfig cfg;
  cfg.clip_norm = 0.5;
  cfg.lr = 1e-3;
  Trainer trainer(m, cfg);
  const auto ex = examples();
  for (int s = 0; s < 6; ++s) {
    const StepStats st = trainer.step(std::span<const TrainingExample>(ex.data() + s % 3, 2), s);
    if (st.clipped) EXPECT_LE(st.post_clip_norm, cfg.clip_norm + 1e-6);
  }
  EXPECT_EQ(trainer.steps_taken(), 6);
}

TEST_F(TrainingTest, ParameterCensusHasOneExtractionSet) {
  Model<float> m = init_model<float>(tiny(), *vocab_, 12);
  TrainingConfig cfg;
  cfg.mode = TrainingMode::kMixed;
  Trainer trainer(m, cfg);
  const auto ex = examples();
  trainer.step(std::span<const TrainingExample>(ex.data(), 2), 1);
  const auto census = parameter_census(m);
  const std::set<std::string> unique(census.begin(), census.end());
  EXPECT_EQ(unique.size(), census.size());
  std::size_t ext = 0;
  for (const auto& k : census) ext += k.starts_with("ext/");
  EXPECT_EQ(ext, extractor_layout(m.config).size());
  EXPECT_EQ(std::count(census.begin(), census.end(), "emb/W"), 1);
}

TEST_F(TrainingTest, ModesTouchOnlyTheirBranches) {
  const Model<float> init = init_model<float>(tiny(), *vocab_, 13);
  const auto ex = examples();
  auto run = [&](TrainingMode mode) {
    Model<float> m = init;
    TrainingConfig cfg;
    cfg.mode = mode;
    cfg.lr = 1e-3;
    Trainer t(m, cfg);
    for (int s = 0; s < 3; ++s) t.step(std::span<const TrainingExample>(ex.data() + 2 * s, 2), s);
    return m;
  };
  const Model<float> one_hot = run(TrainingMode::kOneHot);
  EXPECT_EQ(one_hot.enroller.tensors(), init.enroller.tensors());
  EXPECT_NE(one_hot.embeddings.values(), init.embeddings.values());
  const Model<float> enrl = run(TrainingMode::kEnrollment);
  EXPECT_EQ(enrl.embeddings.values(), init.embeddings.values());
  EXPECT_NE(enrl.enroller.tensors(), init.enroller.tensors());
  for (auto mode : {TrainingMode::kMixed, TrainingMode::kMixedEl}) {
    const Model<float> mixed = run(mode);
    EXPECT_NE(mixed.embeddings.values(), init.embeddings.values());
    EXPECT_NE(mixed.enroller.tensors(), init.enroller.tensors());
    EXPECT_NE(mixed.extractor.tensors(), init.extractor.tensors());
  }
}

TEST_F(TrainingTest, NonFiniteLossNamesBatchSeed) {
  Model<float> m = init_model<float>(tiny(), *vocab_, 14);
  m.extractor.at("ext.decoder.weight")(0, 0) = std::numeric_limits<float>::quiet_NaN();
  Trainer t(m, TrainingConfig{});
  const auto ex = examples();
  try {
    t.step(std::span<const TrainingExample>(ex.data(), 1), 4242);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
    EXPECT_EQ(e.subject(), "batch seed 4242");
  }
}

TEST_F(TrainingTest, OverfitsSingleExample) {
  Model<float> m = init_model<float>(ModelConfig::toy(), *vocab_, 15);
  TrainingConfig cfg;
  cfg.mode = TrainingMode::kOneHot;
  cfg.lr = 1e-3;
  Trainer t(m, cfg);
  const auto ex = examples();
  const std::span<const TrainingExample> one(ex.data(), 1);
  const double start = t.step(one, 0).loss.total;
  double end = start;
  for (int s = 1; s < 200; ++s) end = t.step(one, s).loss.total;
  EXPECT_LT(end, start - 3.0);
}

TEST_F(TrainingTest, TrainIsDeterministicAndKeepsArgminEpoch) {
  testing::TempDir dir("train_det");
  const Model<float> init = init_model<float>(tiny(), *vocab_, 16);
  TrainingConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 2;
  cfg.lr = 3e-3;
  cfg.seed = 77;
  const std::span<const RenderedScene> train_s(scenes_->data(), 4), dev_s(scenes_->data() + 4, 2);
  TrainOptions o1;
  o1.trace_path = dir.path / "a.jsonl";
  o1.checkpoint_path = dir.path / "a.ckpt";
  TrainOptions o2;
  o2.trace_path = dir.path / "b.jsonl";
  const TrainResult a = train(init, train_s, dev_s, *bank_, cfg, o1);
  const TrainResult b = train(init, train_s, dev_s, *bank_, cfg, o2);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(o1.trace_path), slurp(o2.trace_path));
  EXPECT_FALSE(slurp(o1.trace_path).empty());
  EXPECT_TRUE(std::filesystem::exists(o1.checkpoint_path));
  ASSERT_EQ(a.epochs.size(), 3u);
  int argmin = 0;
  for (int e = 1; e < 3; ++e) {
    if (a.epochs[e].dev.total < a.epochs[argmin].dev.total) argmin = e;
  }
  EXPECT_EQ(a.best_epoch, a.epochs[argmin].epoch);
  EXPECT_EQ(a.best_dev_loss, a.epochs[argmin].dev.total);
  EXPECT_EQ(a.best.extractor.tensors(), b.best.extractor.tensors());
  const LossReport dev = evaluate_loss(a.best, make_examples(dev_s, *bank_, *vocab_,
                                                             derive_seed(cfg.seed, {fnv1a("dev")})),
                                       cfg);
  EXPECT_NEAR(dev.total, a.best_dev_loss, 1e-9);
}

}  // namespace
}  // namespace tse
