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

#include <nlohmann/json.hpp>

#include "tse/adaptation.hpp"
#include "tse/event_bank.hpp"
#include "tse/metrics.hpp"
#include "tse/model.hpp"
#include "tse/scene.hpp"
#include "tse/training.hpp"

namespace tse::detail {

// Each reader overlays the keys present in `j` onto `base` and rejects
// unknown keys, naming them as <prefix>.<key>.
BankSpec bank_spec_from_json(const nlohmann::json& j, BankSpec base,
                             const std::string& prefix);
nlohmann::json bank_spec_to_json_value(const BankSpec& spec);

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base,
                                   const std::string& prefix);
nlohmann::json to_json_value(const ModelConfig& cfg);

GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base,
                                           const std::string& prefix);
nlohmann::json to_json_value(const GeneratorConfig& cfg);

TrainingConfig training_config_from_json(const nlohmann::json& j, TrainingConfig base,
                                         const std::string& prefix);
nlohmann::json to_json_value(const TrainingConfig& cfg);

AdaptationConfig adaptation_config_from_json(const nlohmann::json& j,
                                             AdaptationConfig base,
                                             const std::string& prefix);
nlohmann::json to_json_value(const AdaptationConfig& cfg);

MetricConfig metric_config_from_json(const nlohmann::json& j, MetricConfig base,
                                     const std::string& prefix);
nlohmann::json to_json_value(const MetricConfig& cfg);

}  // namespace tse::detail
