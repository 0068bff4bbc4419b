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
#include <optional>
#include <string>
#include <vector>

#include "tse/event_bank.hpp"
#include "tse/waveform.hpp"

namespace tse {

struct GeneratorConfig {
  int n_events = 3;
  double clip_min_s = 2.0;
  double clip_max_s = 5.0;
  double duration_s = 6.0;
  double snr_min_db = 15.0;
  double snr_max_db = 25.0;
  // Per-event level jitter in dB around the bank's common clip level.
  double event_gain_min_db = -5.0;
  double event_gain_max_db = 5.0;
  int sample_rate_hz = kDefaultSampleRate;
  std::uint64_t master_seed = 0;

  void validate() const;
  std::size_t length() const;
};

struct SceneEvent {
  std::string source_id;
  std::string class_label;
  double onset_s = 0.0;
  double excerpt_start_s = 0.0;
  double excerpt_len_s = 0.0;
  double gain = 1.0;

  friend bool operator==(const SceneEvent&, const SceneEvent&) = default;
};

// Complete recipe for one mixture. Times are whole multiples of the sample
// period, so rendering from a manifest is exact.
struct SceneManifest {
  std::string scene_id;
  double duration_s = 6.0;
  std::vector<SceneEvent> events;
  std::string noise_source_id;
  double noise_snr_db = 20.0;
  std::string target_class;
  std::uint64_t seed = 0;

  friend bool operator==(const SceneManifest&, const SceneManifest&) = default;
};

std::string manifest_to_json(const SceneManifest& m);
SceneManifest manifest_from_json(const std::string& line);

// Restrictions used for held-out-class scenes: one event is drawn from
// `forced_class` (only from `forced_sources` when non-empty) and the rest
// from `class_pool`.
struct SceneConstraints {
  std::vector<std::string> class_pool;
  std::optional<std::string> forced_class;
  std::vector<std::string> forced_sources;
  bool target_forced = true;
};

struct RenderedScene {
  SceneManifest manifest;
  Waveform mixture;
  std::vector<Waveform> stems;  // one per event; empty when not on disk
  Waveform noise;

  // Sum of stems whose class equals `label`. Throws kIo if one is missing.
  Waveform stem_of(const std::string& label) const;
  Waveform target() const { return stem_of(manifest.target_class); }
};

SceneManifest sample_manifest(const EventBank& bank, const EventBank& noise_bank,
                              const GeneratorConfig& cfg, std::uint64_t scene_seed,
                              const SceneConstraints& constraints = {});
RenderedScene render_scene(const SceneManifest& manifest, const EventBank& bank,
                           const EventBank& noise_bank, int sample_rate_hz);
RenderedScene generate_scene(const EventBank& bank, const EventBank& noise_bank,
                             const GeneratorConfig& cfg, std::uint64_t scene_seed,
                             const SceneConstraints& constraints = {});

std::uint64_t scene_seed(std::uint64_t master_seed, const std::string& split,
                         std::size_t index);
std::string scene_id(const std::string& split, std::size_t index);

// In-memory dataset; scene i uses scene_seed(cfg.master_seed, split, i).
std::vector<RenderedScene> generate_scenes(const EventBank& bank,
                                           const EventBank& noise_bank,
                                           const GeneratorConfig& cfg,
                                           std::size_t count, const std::string& split,
                                           const SceneConstraints& constraints = {},
                                           int workers = 1);

struct DatasetWriteOptions {
  bool write_all_stems = true;
  WavEncoding encoding = WavEncoding::kFloat32;
  int workers = 1;
};

// Writes <out>/<split>/manifest.jsonl and <out>/<split>/<scene_id>/*.wav.
// Returns the manifest path.
std::filesystem::path generate_dataset(const EventBank& bank, const EventBank& noise_bank,
                                       const GeneratorConfig& cfg, std::size_t count,
                                       const std::string& split,
                                       const std::filesystem::path& out,
                                       const SceneConstraints& constraints = {},
                                       const DatasetWriteOptions& options = {});

// Writes the WAVs of one scene under <split_dir>/<scene_id>/.
void write_scene(const RenderedScene& scene, const std::filesystem::path& split_dir,
                 const DatasetWriteOptions& options = {});

std::vector<SceneManifest> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<SceneManifest>& manifests);
// Loads mixture, noise and the per-event stems from <dir>/<scene_id>/.
// target.wav stands in for a missing target stem.
RenderedScene load_scene(const SceneManifest& manifest, const std::filesystem::path& dir);

// K distinct clips of `label`, none equal to `exclude_source_id`.
std::vector<const EventClip*> pick_enrollment_clips(const EventBank& bank,
                                                    const std::string& label,
                                                    const std::string& exclude_source_id,
                                                    int k, std::uint64_t seed);
std::vector<Waveform> pick_enrollment(const EventBank& bank, const std::string& label,
                                      const std::string& exclude_source_id, int k,
                                      std::uint64_t seed);

}  // namespace tse
