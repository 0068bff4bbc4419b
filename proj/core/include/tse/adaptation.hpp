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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tse/checkpoint.hpp"
#include "tse/event_bank.hpp"
#include "tse/metrics.hpp"
#include "tse/scene.hpp"
#include "tse/training.hpp"

namespace tse {

enum class AdaptInit { kAverage, kRandom };
std::string to_string(AdaptInit init);
AdaptInit parse_adapt_init(const std::string& s);

struct AdaptationConfig {
  int k_shots = 5;
  int epochs = 10;
  double lr = 1e-3;
  AdaptInit init = AdaptInit::kAverage;
  int adaptation_mixtures = 100;
  int batch_size = 8;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  AdamConfig adam;
  MetricConfig metric;

  void validate() const;
};

// A new class and the K enrollment clips that are its only audio.
struct NewClassShots {
  std::string label;
  std::vector<EventClip> shots;
};

struct NewClassRegistration {
  std::string label;
  std::vector<std::string> shot_ids;
  AdaptInit init = AdaptInit::kAverage;
  std::size_t column = 0;
  Vec<float> initial;
  Vec<float> adapted;
  // Mean 1-hot loss on the adaptation set before training, the running mean
  // of each epoch, and a final full pass.
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;
  double final_loss = 0.0;
};

// Scenes with n_events - 1 seen-class events and one event of the new class
// taken from its shots; the new class is always the target.
std::vector<RenderedScene> build_adaptation_set(const EventBank& train_bank,
                                                const NewClassShots& new_class,
                                                const EventBank& noise_bank,
                                                const GeneratorConfig& generator,
                                                const AdaptationConfig& cfg,
                                                int workers = 1);

// Bank holding the training clips plus the shots of every new class.
EventBank merge_banks(const EventBank& base, std::span<const NewClassShots> extra);

struct AdaptationResult {
  Model<float> model;
  std::vector<NewClassRegistration> registrations;
};

// Registers every new class and trains only its column against the 1-hot
// extraction loss. Classes are optimised independently (own seed stream,
// optimiser state and clipping), so adapting them jointly or one at a time
// gives the same columns. `sets[i]` belongs to `classes[i]`.
AdaptationResult adapt(const Checkpoint& checkpoint,
                       std::span<const NewClassShots> classes,
                       std::span<const std::vector<RenderedScene>> sets,
                       const AdaptationConfig& cfg);

// Embedding resolution: shots when given (mean of the encoder
// outputs), else the column of `label`. Unknown label without shots throws.
Vec<float> embed_for_class(const Model<float>& model, const std::string& label,
                           std::span<const Waveform> shots = {});

}  // namespace tse
