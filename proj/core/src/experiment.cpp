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

#include "tse/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "tse/error.hpp"
#include "tse/parallel.hpp"

namespace tse {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

Experiment prepare_experiment(const RunConfig& cfg) {
  cfg.validate();
  Experiment ex;
  ex.full = build_event_bank(cfg.bank);
  ex.noise = build_noise_bank(cfg.bank);
  ex.held_out = cfg.held_out;
  std::vector<EventClip> train, test;
  for (const auto& label : ex.full.labels()) {
    auto clips = ex.full.clips_of(label);
    std::sort(clips.begin(), clips.end(),
              [](const EventClip* a, const EventClip* b) { return a->source_id < b->source_id; });
    const auto n = clips.size();
    const auto n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.sizes.test_clip_fraction * n)), 1, n - 1);
    const std::size_t n_train = n - n_test;
    const bool held = contains(cfg.held_out, label);
    if (held) {
      require(static_cast<std::size_t>(cfg.adaptation.k_shots) <= n_train,
              ErrorCode::kConfig,
              "held-out class has " + std::to_string(n_train) + " training clips, fewer than " +
                  "adaptation.k_shots",
              label);
      NewClassShots shots{label, {}};
      for (int k = 0; k < cfg.adaptation.k_shots; ++k) shots.shots.push_back(*clips[k]);
      ex.shots.push_back(std::move(shots));
    } else {
      ex.seen.push_back(label);
      for (std::size_t i = 0; i < n_train; ++i) train.push_back(*clips[i]);
    }
    for (std::size_t i = n_train; i < n; ++i) test.push_back(*clips[i]);
  }
  ex.train_bank = EventBank(std::move(train));
  ex.test_bank = EventBank(std::move(test));
  return ex;
}

std::size_t split_size(const RunConfig& cfg, const std::string& split) {
  if (split == "train") return static_cast<std::size_t>(cfg.sizes.train);
  if (split == "dev") return static_cast<std::size_t>(cfg.sizes.dev);
  if (split == "test") return static_cast<std::size_t>(cfg.sizes.test);
  if (split == "new_test") return static_cast<std::size_t>(cfg.sizes.new_class_test);
  fail(ErrorCode::kInvalidArgument, "unknown split (train, dev, test, new_test)", split);
}

const EventBank& bank_for_split(const Experiment& ex, const std::string& split) {
  if (split == "train" || split == "dev") return ex.train_bank;
  if (split == "test" || split == "new_test") return ex.test_bank;
  fail(ErrorCode::kInvalidArgument, "unknown split (train, dev, test, new_test)", split);
}

EventBank shots_bank(const Experiment& ex) {
  return merge_banks(EventBank{}, ex.shots);
}

GeneratorConfig generator_for_split(const RunConfig& cfg, const std::string& split) {
  GeneratorConfig g = cfg.scene;
  if (split == "train" || split == "dev") g.n_events = cfg.sizes.train_events;
  if (split == "test") g.n_events = cfg.sizes.test_events;
  return g;
}

SceneConstraints constraints_for_split(const Experiment& ex, const std::string& split,
                                       std::size_t index) {
  SceneConstraints c;
  c.class_pool = ex.seen;
  if (split == "new_test") {
    require(!ex.held_out.empty(), ErrorCode::kConfig,
            "the new_test split needs at least one held_out class", "held_out");
    c.forced_class = ex.held_out[index % ex.held_out.size()];
    c.target_forced = true;
  }
  return c;
}

std::vector<RenderedScene> make_split(const Experiment& ex, const RunConfig& cfg,
                                      const std::string& split) {
  const std::size_t count = split_size(cfg, split);
  const EventBank& bank = bank_for_split(ex, split);
  const GeneratorConfig gen = generator_for_split(cfg, split);
  std::vector<RenderedScene> scenes(count);
  parallel_for(count, cfg.workers, [&](std::size_t i) {
    SceneManifest m = sample_manifest(bank, ex.noise, gen, scene_seed(gen.master_seed, split, i),
                                      constraints_for_split(ex, split, i));
    m.scene_id = scene_id(split, i);
    scenes[i] = render_scene(m, bank, ex.noise, gen.sample_rate_hz);
  });
  return scenes;
}

}  // namespace tse
