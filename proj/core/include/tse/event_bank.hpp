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

#include "tse/waveform.hpp"

namespace tse {

// One synthetic sound class: a recipe name plus per-parameter [lo, hi]
// ranges sampled independently for every clip. Supported recipes:
//   harmonic     note sequence of a harmonic complex (f0_hz, harmonics, note_s)
//   chirp        repeated upward sweeps (f_lo_hz, f_hi_hz, sweep_s)
//   noise_burst  gated band-pass noise (centre_hz, q, burst_s, gap_s)
//   am_noise     band-pass noise with sinusoidal AM (centre_hz, q, rate_hz)
//   knock        damped resonator impulses (resonance_hz, decay_s, rate_hz)
//   siren        tone with slow frequency modulation (carrier_hz, depth_hz, rate_hz)
struct ClassRecipe {
  std::string label;
  std::string recipe;
  int count = 0;
  std::map<std::string, std::vector<double>> params;
};

struct NoiseRecipe {
  int count = 8;
  // AR(1) coefficient range: 0 is white, values near 1 are brown-ish.
  double tilt_min = 0.0;
  double tilt_max = 0.95;
  double duration_s = 6.0;
};

struct BankSpec {
  std::uint64_t seed = 0;
  int sample_rate_hz = kDefaultSampleRate;
  // Source clip length range; scene excerpts are cut from these.
  double clip_min_s = 5.0;
  double clip_max_s = 6.0;
  std::vector<ClassRecipe> classes;
  NoiseRecipe noise;

  void validate() const;
};

BankSpec parse_bank_spec(const std::string& json_text);
BankSpec load_bank_spec(const std::filesystem::path& path);
std::string bank_spec_to_json(const BankSpec& spec);

// Six acoustically distinct classes, `clips_per_class` clips each.
BankSpec default_bank_spec(int clips_per_class = 10, std::uint64_t seed = 1);

struct EventClip {
  std::string class_label;
  Waveform waveform;
  std::string source_id;
};

class EventBank {
 public:
  EventBank() = default;
  explicit EventBank(std::vector<EventClip> clips);

  std::size_t size() const noexcept { return clips_.size(); }
  const std::vector<EventClip>& clips() const noexcept { return clips_; }
  // Labels in first-appearance order.
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool has_class(const std::string& label) const;
  std::vector<const EventClip*> clips_of(const std::string& label) const;
  const EventClip& find(const std::string& source_id) const;
  bool contains(const std::string& source_id) const;

  // Subset restricted to the given labels (order preserved).
  EventBank filtered(const std::vector<std::string>& labels) const;

 private:
  std::vector<EventClip> clips_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> by_id_;
};

// Deterministic in spec (including spec.seed). Throws if any class has
// fewer than two clips.
EventBank build_event_bank(const BankSpec& spec);
// Background noise clips, source ids "noise/ar1/<k>".
EventBank build_noise_bank(const BankSpec& spec);

// Loader hook for real corpora: <root>/<label>/*.wav, one class per folder.
EventBank load_event_bank_dir(const std::filesystem::path& root,
                              int expected_rate_hz);

}  // namespace tse
