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

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace tse {

inline constexpr int kDefaultSampleRate = 8000;

// Finite, non-empty, mono signal at a fixed sample rate. Samples are kept in
// double precision; the network casts to its own scalar type at the boundary.
class Waveform {
 public:
  Waveform() = default;
  Waveform(std::vector<double> samples, int sample_rate_hz);

  static Waveform zeros(std::size_t length, int sample_rate_hz);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  int sample_rate() const noexcept { return sample_rate_hz_; }
  double duration_s() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<double> mutable_samples() noexcept { return samples_; }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }

  // Sum of squares and mean square.
  double energy() const noexcept;
  double power() const noexcept;

  Waveform scaled(double gain) const;
  // Copy of [start, start + length); throws if the range leaves the signal.
  Waveform slice(std::size_t start, std::size_t length) const;

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_ = kDefaultSampleRate;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Mono RIFF/WAVE only. When expected_rate_hz > 0 the header rate must match.
Waveform read_wav(const std::filesystem::path& path, int expected_rate_hz = 0);
void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace tse
