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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tse/conditioning.hpp"
#include "tse/embedding.hpp"
#include "tse/error.hpp"
#include "tse/vocabulary.hpp"

namespace tse {
namespace {

Model<double> micro_model(std::size_t classes = 3, std::uint64_t seed = 5) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < classes; ++i) labels.push_back("c" + std::to_string(i));
  return init_model<double>(ModelConfig::micro(), ClassVocabulary(labels), seed);
}

Waveform noise(std::size_t n, std::uint64_t seed) {
  return Waveform(oracle::random_signal(n, seed, 0.1), kDefaultSampleRate);
}

TEST(Vocabulary, IndexStableAndUnique) {
  ClassVocabulary v({"a", "b", "c"});
  EXPECT_EQ(v.index_of("c"), 2u);
  EXPECT_FALSE(v.find("z").has_value());
  EXPECT_THROW(v.index_of("z"), Error);
  EXPECT_THROW(ClassVocabulary({"a", "a"}), Error);
  EXPECT_EQ(v.append("d"), 3u);
  EXPECT_THROW(v.append("a"), Error);
}

TEST(OneHot, IdentityColumns) {
  EmbeddingMatrix<double> w(Mat<double>::Identity(2, 2));
  EXPECT_EQ(encode_one_hot({0}, w), (Vec<double>(2) << 1, 0).finished());
  EXPECT_EQ(encode_one_hot({1}, w), (Vec<double>(2) << 0, 1).finished());
  EXPECT_THROW(encode_one_hot({2}, w), Error);
}

TEST(OneHot, ReproducesEveryColumnExactly) {
  const auto w = EmbeddingMatrix<double>::random(4, 3, 11);
  for (std::size_t n = 0; n < 3; ++n) {
    const Vec<double> e = encode_one_hot({n}, w);
    for (int d = 0; d < 4; ++d) EXPECT_EQ(e(d), w.values()(d, static_cast<Eigen::Index>(n)));
  }
}

TEST(EmbeddingMatrix, RandomInitRange) {
  const int dim = 64;
  const auto w = EmbeddingMatrix<double>::random(dim, 10, 12);
  const double bound = 1.0 / std::sqrt(double(dim));
  EXPECT_LE(w.values().maxCoeff(), bound);
  EXPECT_GE(w.values().minCoeff(), -bound);
  EXPECT_GT(w.values().maxCoeff(), 0.8 * bound);
  EXPECT_EQ(EmbeddingMatrix<double>::random(dim, 10, 12).values(), w.values());
}

TEST(RegisterClass, AppendsWithoutTouchingOldColumns) {
  const auto w = EmbeddingMatrix<float>::random(4, 3, 13);
  const ClassVocabulary vocab({"a", "b", "c"});
  const Vec<float> e = Vec<float>::Constant(4, 0.25f);
  const auto r = register_class(w, vocab, "d", e);
  EXPECT_EQ(r.matrix.dim(), 4);
  EXPECT_EQ(r.matrix.num_classes(), 4);
  EXPECT_EQ(r.index, 3u);
  EXPECT_EQ(r.vocabulary.index_of("d"), 3u);
  EXPECT_EQ(r.matrix.values().leftCols(3), w.values());
  EXPECT_EQ(Vec<float>(r.matrix.values().col(3)), e);
  EXPECT_TRUE(r.matrix.trainable(3));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_FALSE(r.matrix.trainable(i));
  EXPECT_THROW(register_class(r.matrix, r.vocabulary, "d", e), Error);
  EXPECT_THROW(register_class(w, vocab, "x", Vec<float>::Zero(5)), Error);
}

TEST(EmbeddingExport, RoundTrip) {
  testing::TempDir t("emb");
  const auto w = EmbeddingMatrix<float>::random(8, 3, 14);
  const ClassVocabulary vocab({"x", "y", "z"});
  export_embeddings(t.path / "w.bin", w, vocab);
  const auto [w2, v2] = import_embeddings(t.path / "w.bin");
  EXPECT_EQ(w2.values(), w.values());
  EXPECT_EQ(v2, vocab);
}

TEST(Enrollment, OutputDimensionIndependentOfLength) {
  const auto m = micro_model();
  for (std::size_t n : {std::size_t(20), std::size_t(8000), std::size_t(32000)}) {
    EXPECT_EQ(encode_enrollment(m, noise(n, n)).size(), m.config.embed_dim);
  }
  EXPECT_THROW(encode_enrollment(m, noise(19, 1)), Error);
}

TEST(Enrollment, ZeroInputThroughBiasFreeEncoderIsZero) {
  auto m = micro_model();
  for (auto& [key, t] : m.enroller.tensors()) {
    if (key.ends_with(".bias") || key.ends_with(".beta")) t.setZero();
  }
  const Vec<double> e = encode_enrollment(m, Waveform::zeros(4000, kDefaultSampleRate));
  EXPECT_EQ(e, Vec<double>::Zero(m.config.embed_dim));
}

TEST(Enrollment, DeterministicForFixedParams) {
  const auto m = micro_model();
  const Waveform a = noise(3000, 2);
  EXPECT_EQ(encode_enrollment(m, a), encode_enrollment(m, a));
}

TEST(Average, SingleShotAndCopies) {
  const auto m = micro_model();
  const Waveform a = noise(2000, 3);
  const Vec<double> single = encode_enrollment(m, a);
  const std::vector<Waveform> one = {a};
  EXPECT_EQ(average_embeddings(m, std::span<const Waveform>(one)), single);
  const std::vector<Waveform> copies(4, a);
  EXPECT_TRUE(average_embeddings(m, std::span<const Waveform>(copies)).isApprox(single, 1e-14));
  EXPECT_THROW(average_embeddings(m, std::span<const Waveform>()), Error);
}

TEST(Average, StubbedEncoderArithmeticMean) {
  const std::vector<Waveform> shots = {Waveform({1.0}, 8000), Waveform({2.0}, 8000)};
  const auto stub = [](const Waveform& w) {
    Vec<double> e = Vec<double>::Zero(2);
    e(w[0] == 1.0 ? 0 : 1) = 1.0;
    return e;
  };
  const Vec<double> mean = average_embeddings<double>(shots, stub);
  EXPECT_DOUBLE_EQ(mean(0), 0.5);
  EXPECT_DOUBLE_EQ(mean(1), 0.5);
}

TEST(Average, PermutationInvariant) {
  const auto m = micro_model();
  std::vector<Waveform> shots = {noise(1500, 4), noise(2500, 5), noise(1000, 6)};
  const Vec<double> a = average_embeddings(m, std::span<const Waveform>(shots));
  std::reverse(shots.begin(), shots.end());
  EXPECT_TRUE(average_embeddings(m, std::span<const Waveform>(shots)).isApprox(a, 1e-14));
}

TEST(Average, MatchesManualMean) {
  const auto m = micro_model();
  const std::vector<Waveform> shots = {noise(1500, 7), noise(2500, 8)};
  const Vec<double> manual = (encode_enrollment(m, shots[0]) + encode_enrollment(m, shots[1])) / 2;
  EXPECT_TRUE(average_embeddings(m, std::span<const Waveform>(shots)).isApprox(manual, 1e-14));
}

TEST(Enrollment, SilentPaddingSensitivityIsMeasured) {
  // Trailing silence changes the pooled mean; only record that it stays finite.
  const auto m = micro_model();
  const Waveform a = noise(2000, 9);
  std::vector<double> padded(a.samples().begin(), a.samples().end());
  padded.resize(padded.size() + 10 * m.config.hop, 0.0);
  const Vec<double> e1 = encode_enrollment(m, a);
  const Vec<double> e2 = encode_enrollment(m, Waveform(padded, 8000));
  const double rel = (e1 - e2).norm() / e1.norm();
  EXPECT_TRUE(std::isfinite(rel));
  RecordProperty("relative_change", std::to_string(rel));
}

}  // namespace
}  // namespace tse
