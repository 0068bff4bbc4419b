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

#include <string>
#include <vector>

#include "tse/adaptation.hpp"
#include "tse/config.hpp"
#include "tse/event_bank.hpp"
#include "tse/scene.hpp"

namespace tse {

// Clip partitions shared by every command. Within each class the first
// clips (in source-id order) form the training partition and the rest the
// test partition, so test mixtures never reuse a training clip. A held-out
// class contributes only its first k_shots training clips (the shots) and
// its test partition.
struct Experiment {
  EventBank full;
  EventBank noise;
  std::vector<std::string> seen;
  std::vector<std::string> held_out;
  EventBank train_bank;  // training partition of seen classes
  EventBank test_bank;   // test partition of every class
  std::vector<NewClassShots> shots;
};

Experiment prepare_experiment(const RunConfig& cfg);

// Splits: "train", "dev" (training partition), "test" (seen classes, test
// partition) and "new_test" (n_events - 1 seen plus one held-out class, the
// held-out event being the target).
std::vector<RenderedScene> make_split(const Experiment& ex, const RunConfig& cfg,
                                      const std::string& split);
std::size_t split_size(const RunConfig& cfg, const std::string& split);

// The bank that holds every clip a split can reference.
const EventBank& bank_for_split(const Experiment& ex, const std::string& split);

// Bank of the shot clips only, used for new-class enrollment.
EventBank shots_bank(const Experiment& ex);

GeneratorConfig generator_for_split(const RunConfig& cfg, const std::string& split);
SceneConstraints constraints_for_split(const Experiment& ex, const std::string& split,
                                       std::size_t index);

}  // namespace tse
