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

#include "tse/scene.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "tse/error.hpp"
#include "tse/metrics.hpp"
#include "tse/parallel.hpp"
#include "tse/rng.hpp"

namespace tse {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::size_t to_samples(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

double to_seconds(std::size_t samples, int rate) {
  return static_cast<double>(samples) / rate;
}

std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

void GeneratorConfig::validate() const {
  require(n_events >= 1, ErrorCode::kConfig, "must be >= 1", "scene.n_events");
  require(clip_min_s > 0.0 && clip_min_s <= clip_max_s && clip_max_s <= duration_s,
          ErrorCode::kConfig, "need 0 < clip_min_s <= clip_max_s <= duration_s",
          "scene.clip_min_s");
  require(snr_min_db <= snr_max_db, ErrorCode::kConfig, "empty SNR range",
          "scene.snr_min_db");
  require(event_gain_min_db <= event_gain_max_db, ErrorCode::kConfig, "empty gain range",
          "scene.event_gain_min_db");
  require(sample_rate_hz > 0, ErrorCode::kConfig, "must be positive",
          "scene.sample_rate_hz");
}

std::size_t GeneratorConfig::length() const { return to_samples(duration_s, sample_rate_hz); }

std::string manifest_to_json(const SceneManifest& m) {
  ojson j;
  j["scene_id"] = m.scene_id;
  j["duration_s"] = m.duration_s;
  j["events"] = ojson::array();
  for (const auto& e : m.events) {
    j["events"].push_back({{"source_id", e.source_id},
                           {"class_label", e.class_label},
                           {"onset_s", e.onset_s},
                           {"excerpt_start_s", e.excerpt_start_s},
                           {"excerpt_len_s", e.excerpt_len_s},
                           {"gain", e.gain}});
  }
  j["noise_source_id"] = m.noise_source_id;
  j["noise_snr_db"] = m.noise_snr_db;
  j["target_class"] = m.target_class;
  j["seed"] = m.seed;
  return j.dump();
}

SceneManifest manifest_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kFormat, std::string("malformed manifest line: ") + e.what(), "manifest");
  }
  SceneManifest m;
  jsonutil::Reader r(j, "manifest");
  auto need = [&](const char* key, auto& out) {
    require(r.get(key, out), ErrorCode::kFormat, "missing field", r.path(key));
  };
  need("scene_id", m.scene_id);
  need("duration_s", m.duration_s);
  need("noise_source_id", m.noise_source_id);
  need("noise_snr_db", m.noise_snr_db);
  need("target_class", m.target_class);
  need("seed", m.seed);
  require(j.contains("events") && j["events"].is_array(), ErrorCode::kFormat,
          "missing event list", "manifest.events");
  r.mark("events");
  for (const auto& ej : j["events"]) {
    SceneEvent e;
    jsonutil::Reader er(ej, "manifest.events");
    auto need_e = [&](const char* key, auto& out) {
      require(er.get(key, out), ErrorCode::kFormat, "missing field", er.path(key));
    };
    need_e("source_id", e.source_id);
    need_e("class_label", e.class_label);
    need_e("onset_s", e.onset_s);
    need_e("excerpt_start_s", e.excerpt_start_s);
    need_e("excerpt_len_s", e.excerpt_len_s);
    need_e("gain", e.gain);
    er.reject_unknown();
    m.events.push_back(std::move(e));
  }
  r.reject_unknown();
  return m;
}

Waveform RenderedScene::stem_of(const std::string& label) const {
  Waveform out = Waveform::zeros(mixture.size(), mixture.sample_rate());
  bool found = false;
  for (std::size_t k = 0; k < stems.size(); ++k) {
    if (manifest.events[k].class_label != label) continue;
    found = true;
    require(!stems[k].empty(), ErrorCode::kIo, "stem " + std::to_string(k) + " is missing",
            manifest.scene_id);
    auto dst = out.mutable_samples();
    const auto src = stems[k].samples();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  require(found, ErrorCode::kOutOfRange, "class not present in scene", label);
  return out;
}

SceneManifest sample_manifest(const EventBank& bank, const EventBank& noise_bank,
                              const GeneratorConfig& cfg, std::uint64_t seed,
                              const SceneConstraints& constraints) {
  cfg.validate();
  require(noise_bank.size() > 0, ErrorCode::kInvalidArgument, "noise bank is empty");
  Rng rng(seed);
  const int rate = cfg.sample_rate_hz;
  const std::size_t n = cfg.length();

  std::vector<std::string> pool =
      constraints.class_pool.empty() ? bank.labels() : constraints.class_pool;
  if (constraints.forced_class) {
    std::erase(pool, *constraints.forced_class);
  }
  const std::size_t free_events = cfg.n_events - (constraints.forced_class ? 1 : 0);
  require(pool.size() >= free_events, ErrorCode::kInvalidArgument,
          "scene needs " + std::to_string(free_events) +
              " distinct classes but the pool has " + std::to_string(pool.size()));
  for (std::size_t i = 0; i < free_events; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
  pool.resize(free_events);

  SceneManifest m;
  m.duration_s = to_seconds(n, rate);
  m.seed = seed;
  auto add_event = [&](const std::string& label, const EventClip& clip) {
    require(clip.waveform.sample_rate() == rate, ErrorCode::kShapeMismatch,
            "clip sample rate differs from the scene rate", clip.source_id);
    const std::size_t clip_len = clip.waveform.size();
    const std::size_t lo = std::min(clip_len, to_samples(cfg.clip_min_s, rate));
    const std::size_t hi = std::min(clip_len, to_samples(cfg.clip_max_s, rate));
    const std::size_t len = uniform_between(rng, lo, hi);
    const std::size_t start = uniform_between(rng, 0, clip_len - len);
    const std::size_t onset = uniform_between(rng, 0, n - len);
    const double gain_db = uniform(rng, cfg.event_gain_min_db, cfg.event_gain_max_db);
    m.events.push_back({clip.source_id, label, to_seconds(onset, rate),
                        to_seconds(start, rate), to_seconds(len, rate),
                        std::pow(10.0, gain_db / 20.0)});
  };
  for (const auto& label : pool) {
    const auto clips = bank.clips_of(label);
    require(!clips.empty(), ErrorCode::kInvalidArgument, "class has no clips", label);
    add_event(label, *clips[uniform_index(rng, clips.size())]);
  }
  if (constraints.forced_class) {
    const std::string& label = *constraints.forced_class;
    if (constraints.forced_sources.empty()) {
      const auto clips = bank.clips_of(label);
      require(!clips.empty(), ErrorCode::kInvalidArgument, "class has no clips", label);
      add_event(label, *clips[uniform_index(rng, clips.size())]);
    } else {
      const auto& id =
          constraints.forced_sources[uniform_index(rng, constraints.forced_sources.size())];
      const EventClip& clip = bank.find(id);
      require(clip.class_label == label, ErrorCode::kInvalidArgument,
              "forced source belongs to another class", id);
      add_event(label, clip);
    }
  }
  if (constraints.forced_class && constraints.target_forced) {
    m.target_class = *constraints.forced_class;
  } else {
    m.target_class = m.events[uniform_index(rng, m.events.size())].class_label;
  }
  const auto& noise = noise_bank.clips()[uniform_index(rng, noise_bank.size())];
  m.noise_source_id = noise.source_id;
  m.noise_snr_db = uniform(rng, cfg.snr_min_db, cfg.snr_max_db);
  return m;
}

RenderedScene render_scene(const SceneManifest& m, const EventBank& bank,
                           const EventBank& noise_bank, int rate) {
  const std::size_t n = to_samples(m.duration_s, rate);
  require(n > 0 && !m.events.empty(), ErrorCode::kInvalidArgument,
          "scene has no duration or no events", m.scene_id);
  RenderedScene out;
  out.manifest = m;
  for (const auto& e : m.events) {
    const EventClip& clip = bank.find(e.source_id);
    const std::size_t onset = to_samples(e.onset_s, rate);
    const std::size_t start = to_samples(e.excerpt_start_s, rate);
    const std::size_t len = to_samples(e.excerpt_len_s, rate);
    require(onset + len <= n, ErrorCode::kOutOfRange, "event leaves the scene", e.source_id);
    require(start + len <= clip.waveform.size(), ErrorCode::kOutOfRange,
            "excerpt leaves the source clip", e.source_id);
    std::vector<double> stem(n, 0.0);
    const auto src = clip.waveform.samples();
    for (std::size_t i = 0; i < len; ++i) stem[onset + i] = e.gain * src[start + i];
    out.stems.emplace_back(std::move(stem), rate);
  }
  const EventClip& noise_clip = noise_bank.find(m.noise_source_id);
  require(noise_clip.waveform.size() >= n, ErrorCode::kOutOfRange,
          "noise clip shorter than the scene", m.noise_source_id);
  const Waveform raw_noise = noise_clip.waveform.slice(0, n);
  const Waveform events = mix(out.stems);
  out.noise = raw_noise.scaled(gain_for_snr(events.power(), raw_noise.power(), m.noise_snr_db));
  std::vector<Waveform> parts = out.stems;
  parts.push_back(out.noise);
  out.mixture = mix(parts);
  return out;
}

RenderedScene generate_scene(const EventBank& bank, const EventBank& noise_bank,
                             const GeneratorConfig& cfg, std::uint64_t seed,
                             const SceneConstraints& constraints) {
  SceneManifest m = sample_manifest(bank, noise_bank, cfg, seed, constraints);
  return render_scene(m, bank, noise_bank, cfg.sample_rate_hz);
}

std::uint64_t scene_seed(std::uint64_t master_seed, const std::string& split,
                         std::size_t index) {
  return derive_seed(master_seed, {fnv1a(split), static_cast<std::uint64_t>(index)});
}

std::string scene_id(const std::string& split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%05zu", index);
  return split + buf;
}

std::vector<RenderedScene> generate_scenes(const EventBank& bank,
                                           const EventBank& noise_bank,
                                           const GeneratorConfig& cfg, std::size_t count,
                                           const std::string& split,
                                           const SceneConstraints& constraints,
                                           int workers) {
  std::vector<RenderedScene> scenes(count);
  parallel_for(count, workers, [&](std::size_t i) {
    SceneManifest m = sample_manifest(bank, noise_bank, cfg,
                                      scene_seed(cfg.master_seed, split, i), constraints);
    m.scene_id = scene_id(split, i);
    scenes[i] = render_scene(m, bank, noise_bank, cfg.sample_rate_hz);
  });
  return scenes;
}

void write_manifest(const fs::path& path, const std::vector<SceneManifest>& manifests) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write manifest", path.string());
  for (const auto& m : manifests) out << manifest_to_json(m) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed", path.string());
}

void write_scene(const RenderedScene& scene, const fs::path& split_dir,
                 const DatasetWriteOptions& options) {
  const fs::path sd = split_dir / scene.manifest.scene_id;
  write_wav(sd / "mixture.wav", scene.mixture, options.encoding);
  write_wav(sd / "target.wav", scene.target(), options.encoding);
  write_wav(sd / "noise.wav", scene.noise, options.encoding);
  if (options.write_all_stems) {
    for (std::size_t k = 0; k < scene.stems.size(); ++k) {
      write_wav(sd / ("stem_" + std::to_string(k) + ".wav"), scene.stems[k], options.encoding);
    }
  }
}

std::vector<SceneManifest> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open manifest", path.string());
  std::vector<SceneManifest> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(manifest_from_json(line));
    } catch (const Error& e) {
      fail(e.code(), e.what(), path.string() + ":" + std::to_string(lineno));
    }
  }
  return out;
}

fs::path generate_dataset(const EventBank& bank, const EventBank& noise_bank,
                          const GeneratorConfig& cfg, std::size_t count,
                          const std::string& split, const fs::path& out,
                          const SceneConstraints& constraints,
                          const DatasetWriteOptions& options) {
  require(count >= 1, ErrorCode::kInvalidArgument, "count must be >= 1", "count");
  const fs::path dir = out / split;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::kIo, "cannot create output directory",
          dir.string());
  std::vector<SceneManifest> manifests(count);
  parallel_for(count, options.workers, [&](std::size_t i) {
    SceneManifest m = sample_manifest(bank, noise_bank, cfg,
                                      scene_seed(cfg.master_seed, split, i), constraints);
    m.scene_id = scene_id(split, i);
    write_scene(render_scene(m, bank, noise_bank, cfg.sample_rate_hz), dir, options);
    manifests[i] = std::move(m);
  });
  const fs::path manifest_path = dir / "manifest.jsonl";
  write_manifest(manifest_path, manifests);
  return manifest_path;
}

RenderedScene load_scene(const SceneManifest& m, const fs::path& dir) {
  const fs::path sd = dir / m.scene_id;
  RenderedScene out;
  out.manifest = m;
  out.mixture = read_wav(sd / "mixture.wav");
  const int rate = out.mixture.sample_rate();
  out.noise = read_wav(sd / "noise.wav", rate);
  // Missing stems stay empty so that scoring them fails per record; the
  // target stem can still come from target.wav when its class is unique.
  std::size_t target_events = 0;
  for (const auto& e : m.events) target_events += e.class_label == m.target_class;
  for (std::size_t k = 0; k < m.events.size(); ++k) {
    const fs::path p = sd / ("stem_" + std::to_string(k) + ".wav");
    if (fs::exists(p)) {
      out.stems.push_back(read_wav(p, rate));
    } else if (m.events[k].class_label == m.target_class && target_events == 1 &&
               fs::exists(sd / "target.wav")) {
      out.stems.push_back(read_wav(sd / "target.wav", rate));
    } else {
      out.stems.emplace_back();
    }
  }
  return out;
}

std::vector<const EventClip*> pick_enrollment_clips(const EventBank& bank,
                                                    const std::string& label,
                                                    const std::string& exclude_source_id,
                                                    int k, std::uint64_t seed) {
  require(k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1", "k");
  std::vector<const EventClip*> pool;
  for (const EventClip* c : bank.clips_of(label)) {
    if (c->source_id != exclude_source_id) pool.push_back(c);
  }
  require(pool.size() >= static_cast<std::size_t>(k), ErrorCode::kInvalidArgument,
          "class has " + std::to_string(pool.size()) + " eligible clips, need " +
              std::to_string(k),
          label);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
  pool.resize(k);
  return pool;
}

std::vector<Waveform> pick_enrollment(const EventBank& bank, const std::string& label,
                                      const std::string& exclude_source_id, int k,
                                      std::uint64_t seed) {
  std::vector<Waveform> out;
  for (const EventClip* c : pick_enrollment_clips(bank, label, exclude_source_id, k, seed)) {
    out.push_back(c->waveform);
  }
  return out;
}

}  // namespace tse
