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
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tse/error.hpp"
#include "tse/metrics.hpp"
#include "tse/waveform.hpp"

namespace tse {
namespace {

using V = std::vector<double>;

Waveform W(V v) { return Waveform(std::move(v), kDefaultSampleRate); }

TEST(Mix, SampleWiseSum) {
  const std::vector<Waveform> parts = {W({1, 0}), W({0, 1})};
  EXPECT_EQ(mix(parts), W({1, 1}));
}

TEST(Mix, ZeroIsIdentity) {
  const Waveform x = W({0.5, -2.0, 3.0});
  const std::vector<Waveform> parts = {x, Waveform::zeros(3, kDefaultSampleRate)};
  EXPECT_EQ(mix(parts), x);
}

TEST(Mix, MatchesIndependentLoop) {
  std::vector<Waveform> parts;
  for (int k = 0; k < 3; ++k) parts.push_back(W(oracle::random_signal(16, 10 + k)));
  const Waveform out = mix(parts);
  for (std::size_t i = 0; i < 16; ++i) {
    double s = 0.0;
    for (const auto& p : parts) s += p[i];
    EXPECT_DOUBLE_EQ(out[i], s);
  }
}

TEST(Mix, MismatchNamesComponent) {
  const std::vector<Waveform> bad_len = {W({1, 2}), W({1, 2}), W({1})};
  try {
    mix(bad_len);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_EQ(e.subject(), "component 2");
  }
  const std::vector<Waveform> bad_rate = {W({1, 2}), Waveform({1, 2}, 16000)};
  EXPECT_THROW(mix(bad_rate), Error);
}

TEST(Mix, CommutativeAndAssociative) {
  const Waveform a = W(oracle::random_signal(64, 1)), b = W(oracle::random_signal(64, 2)),
                 c = W(oracle::random_signal(64, 3));
  const std::vector<Waveform> ab = {a, b}, ba = {b, a};
  const Waveform left = mix(std::vector<Waveform>{mix(ab), c});
  const Waveform right = mix(std::vector<Waveform>{a, mix(std::vector<Waveform>{b, c})});
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(mix(ab)[i], mix(ba)[i]);
    EXPECT_NEAR(left[i], right[i], 1e-6 * std::max(1.0, std::abs(left[i])));
  }
}

TEST(NegSnr, ClosedForm) {
  EXPECT_NEAR(neg_snr_loss(V{1, 0}, V{2, 0}), -10 * std::log10(4.0), 1e-6);
  EXPECT_NEAR(neg_snr_loss(V{1, 0}, V{2, 0}), -6.0206, 1e-4);
  EXPECT_NEAR(neg_snr_loss(V{0, 0}, V{1, 1}), 0.0, 1e-6);
  EXPECT_NEAR(neg_snr_loss(V{0, 1}, V{1, 0}), 3.0103, 1e-4);
  EXPECT_NEAR(neg_snr_loss(V{0, 1}, V{1, 0}), -10 * std::log10(0.5), 1e-6);
}

TEST(NegSnr, ExactReconstructionHitsFloor) {
  const V x = oracle::random_signal(32, 4);
  EXPECT_NEAR(neg_snr_loss(x, x), -80.0, 1e-9);
  MetricConfig cfg;
  cfg.eps = 1e-4;
  EXPECT_NEAR(neg_snr_loss(x, x, cfg), -40.0, 1e-9);
}

TEST(NegSnr, ZeroReferenceIsError) {
  EXPECT_THROW(neg_snr_loss(V{1, 1}, V{0, 0}), Error);
  EXPECT_THROW(neg_snr_loss(V{1, 1}, V{1, 1, 1}), Error);
}

TEST(NegSnr, MatchesOracleAndInvariances) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const V x = oracle::random_signal(40, 100 + t), xh = oracle::random_signal(40, 200 + t);
    const double l = neg_snr_loss(xh, x);
    EXPECT_NEAR(l, oracle::neg_snr(xh, x), 1e-9);
    // Common permutation.
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    V px(40), pxh(40);
    for (std::size_t i = 0; i < 40; ++i) {
      px[i] = x[perm[i]];
      pxh[i] = xh[perm[i]];
    }
    EXPECT_NEAR(neg_snr_loss(pxh, px), l, 1e-9);
    // Common scaling, including negative factors.
    for (double c : {-3.0, 0.01, 7.5}) {
      V cx = x, cxh = xh;
      for (auto& v : cx) v *= c;
      for (auto& v : cxh) v *= c;
      EXPECT_NEAR(neg_snr_loss(cxh, cx), l, 1e-9);
    }
  }
}

TEST(NegSnr, GradientMatchesFiniteDifference) {
  const V x = oracle::random_signal(24, 6), xh = oracle::random_signal(24, 7);
  V g(24);
  const double l = neg_snr_loss_with_grad(xh, x, g);
  EXPECT_DOUBLE_EQ(l, neg_snr_loss(xh, x));
  for (std::size_t i = 0; i < 24; ++i) {
    V p = xh, m = xh;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    EXPECT_NEAR(g[i], (neg_snr_loss(p, x) - neg_snr_loss(m, x)) / 2e-6, 1e-5);
  }
}

TEST(SiSdr, ClosedFormAndCap) {
  const V ref = oracle::random_signal(50, 8);
  EXPECT_DOUBLE_EQ(si_sdr(ref, ref), 60.0);
  V twice = ref;
  for (auto& v : twice) v *= 2.0;
  EXPECT_DOUBLE_EQ(si_sdr(twice, ref), si_sdr(ref, ref));
  EXPECT_NEAR(si_sdr(V{1, 1}, V{1, 0}), 0.0, 1e-6);
  EXPECT_DOUBLE_EQ(si_sdr(V{0, 0}, V{1, 0}), -60.0);
  EXPECT_THROW(si_sdr(V{1, 0}, V{0, 0}), Error);
  MetricConfig cfg;
  cfg.sdr_cap_db = 30.0;
  EXPECT_DOUBLE_EQ(si_sdr(ref, ref, cfg), 30.0);
}

TEST(SiSdr, NoMeanSubtraction) {
  // With mean removal these two would score identically.
  const V ref = {1.0, 2.0, 3.0, 4.0};
  const V est = {2.0, 3.0, 4.0, 5.0};
  EXPECT_NEAR(si_sdr(est, ref), oracle::si_sdr(est, ref), 1e-12);
  EXPECT_LT(si_sdr(est, ref), 60.0);
}

TEST(SiSdr, ScaleInvarianceOverRandomPairs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int t = 0; t < 100; ++t) {
    const V ref = oracle::random_signal(128, 300 + t);
    V est = oracle::random_signal(128, 400 + t, 0.5);
    for (std::size_t i = 0; i < ref.size(); ++i) est[i] += ref[i];
    const double a = scale(rng);
    V scaled = est;
    for (auto& v : scaled) v *= a;
    const double base = si_sdr(est, ref);
    EXPECT_NEAR(base, oracle::si_sdr(est, ref), 1e-9);
    EXPECT_NEAR(si_sdr(scaled, ref), base, 1e-6);
  }
}

TEST(Cosine, ClosedForm) {
  const V u = {0.3, -1.2, 2.0};
  V neg = u;
  for (auto& v : neg) v = -v;
  EXPECT_NEAR(cosine_distance(u, u), 0.0, 1e-12);
  EXPECT_NEAR(cosine_distance(V{1, 0}, V{0, 1}), 1.0, 1e-12);
  EXPECT_NEAR(cosine_distance(u, neg), 2.0, 1e-12);
  EXPECT_THROW(cosine_distance(V{0, 0}, V{1, 0}), Error);
}

TEST(Cosine, SymmetricScaleInvariantAndOracle) {
  for (int t = 0; t < 50; ++t) {
    const V u = oracle::random_signal(8, 500 + t), v = oracle::random_signal(8, 600 + t);
    const double d = cosine_distance(u, v);
    EXPECT_NEAR(d, oracle::cosine(u, v), 1e-12);
    EXPECT_NEAR(cosine_distance(v, u), d, 1e-12);
    V su = u;
    for (auto& x : su) x *= 4.2;
    EXPECT_NEAR(cosine_distance(su, v), d, 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
  }
}

TEST(Cosine, GradientMatchesFiniteDifference) {
  const V u = oracle::random_signal(6, 11), v = oracle::random_signal(6, 12);
  V gu(6), gv(6);
  cosine_distance_with_grad(u, v, gu, gv);
  for (std::size_t i = 0; i < 6; ++i) {
    V p = u, m = u;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    EXPECT_NEAR(gu[i], (cosine_distance(p, v) - cosine_distance(m, v)) / 2e-6, 1e-6);
    p = v;
    m = v;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    EXPECT_NEAR(gv[i], (cosine_distance(u, p) - cosine_distance(u, m)) / 2e-6, 1e-6);
  }
}

TEST(GainForSnr, ClosedForm) {
  EXPECT_NEAR(gain_for_snr(1, 1, 20), 0.1, 1e-12);
  EXPECT_NEAR(gain_for_snr(1, 1, 0), 1.0, 1e-12);
  EXPECT_NEAR(gain_for_snr(4, 1, 20), 0.2, 1e-12);
  EXPECT_THROW(gain_for_snr(0, 1, 20), Error);
  EXPECT_THROW(gain_for_snr(1, -1, 20), Error);
}

TEST(GainForSnr, ReproducesTargetOnMeasuredPowers) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> snr(-10, 40);
  for (int t = 0; t < 50; ++t) {
    const V s = oracle::random_signal(256, 700 + t), n = oracle::random_signal(256, 800 + t, 3);
    const double target = snr(rng);
    const double g = gain_for_snr(oracle::mean_square(s), oracle::mean_square(n), target);
    V scaled = n;
    for (auto& v : scaled) v *= g;
    const double measured =
        10 * std::log10(oracle::mean_square(s) / oracle::mean_square(scaled));
    EXPECT_NEAR(measured, target, 1e-9);
    EXPECT_NEAR(snr_db(oracle::mean_square(s), oracle::mean_square(scaled)), target, 1e-9);
  }
}

TEST(MetricConfig, Validation) {
  MetricConfig c;
  EXPECT_NO_THROW(c.validate());
  c.eps = 0;
  EXPECT_THROW(c.validate(), Error);
  c = MetricConfig{};
  c.sdr_cap_db = std::numeric_limits<double>::infinity();
  EXPECT_THROW(c.validate(), Error);
}

TEST(Waveform, Invariants) {
  EXPECT_THROW(Waveform({}, 8000), Error);
  EXPECT_THROW(Waveform({1.0, std::nan("")}, 8000), Error);
  EXPECT_THROW(Waveform({1.0}, 0), Error);
  const Waveform w = W({1, 2, 3, 4});
  EXPECT_EQ(w.slice(1, 2), W({2, 3}));
  EXPECT_THROW(w.slice(3, 2), Error);
  EXPECT_DOUBLE_EQ(w.energy(), 30.0);
  EXPECT_DOUBLE_EQ(w.power(), 7.5);
}

TEST(Wav, RoundTripFloatAndPcm) {
  const auto dir = std::filesystem::temp_directory_path() / "tse_wav_test";
  std::filesystem::create_directories(dir);
  V s = oracle::random_signal(1000, 14, 0.2);
  for (auto& v : s) v = std::clamp(v, -0.99, 0.99);
  const Waveform w(s, 8000);
  write_wav(dir / "f.wav", w, WavEncoding::kFloat32);
  const Waveform f = read_wav(dir / "f.wav", 8000);
  ASSERT_EQ(f.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(f[i], static_cast<float>(w[i]));
  write_wav(dir / "p.wav", w, WavEncoding::kPcm16);
  const Waveform p = read_wav(dir / "p.wav");
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(p[i], w[i], 1.0 / 32767);
  EXPECT_THROW(read_wav(dir / "p.wav", 16000), Error);
  EXPECT_THROW(read_wav(dir / "missing.wav"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tse
