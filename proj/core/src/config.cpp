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

#include "tse/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "json_util.hpp"
#include "tse/error.hpp"
#include "tse/rng.hpp"

namespace tse {

using json = nlohmann::json;

namespace detail {

ModelConfig model_config_from_json(const json& j, ModelConfig c, const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  r.get("enc_filters", c.enc_filters);
  r.get("win_len", c.win_len);
  r.get("hop", c.hop);
  r.get("bottleneck", c.bottleneck);
  r.get("conv_channels", c.conv_channels);
  r.get("kernel", c.kernel);
  r.get("blocks_per_repeat", c.blocks_per_repeat);
  r.get("repeats", c.repeats);
  r.get("embed_dim", c.embed_dim);
  r.get("enroll_repeats", c.enroll_repeats);
  r.get("norm_eps", c.norm_eps);
  std::string s;
  if (r.get("mask_activation", s)) {
    require(s == to_string(MaskActivation::kSigmoid), ErrorCode::kConfig,
            "unsupported value '" + s + "'", r.path("mask_activation"));
  }
  if (r.get("norm_kind", s)) {
    require(s == to_string(NormKind::kGlobalLayerNorm), ErrorCode::kConfig,
            "unsupported value '" + s + "'", r.path("norm_kind"));
  }
  r.reject_unknown();
  return c;
}

json to_json_value(const ModelConfig& c) {
  return {{"enc_filters", c.enc_filters},
          {"win_len", c.win_len},
          {"hop", c.hop},
          {"bottleneck", c.bottleneck},
          {"conv_channels", c.conv_channels},
          {"kernel", c.kernel},
          {"blocks_per_repeat", c.blocks_per_repeat},
          {"repeats", c.repeats},
          {"embed_dim", c.embed_dim},
          {"enroll_repeats", c.enroll_repeats},
          {"mask_activation", to_string(c.mask_activation)},
          {"norm_kind", to_string(c.norm_kind)},
          {"norm_eps", c.norm_eps}};
}

GeneratorConfig generator_config_from_json(const json& j, GeneratorConfig c,
                                           const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  r.get("n_events", c.n_events);
  r.get("clip_min_s", c.clip_min_s);
  r.get("clip_max_s", c.clip_max_s);
  r.get("duration_s", c.duration_s);
  r.get("snr_min_db", c.snr_min_db);
  r.get("snr_max_db", c.snr_max_db);
  r.get("event_gain_min_db", c.event_gain_min_db);
  r.get("event_gain_max_db", c.event_gain_max_db);
  r.get("sample_rate_hz", c.sample_rate_hz);
  r.reject_unknown();
  return c;
}

json to_json_value(const GeneratorConfig& c) {
  return {{"n_events", c.n_events},
          {"clip_min_s", c.clip_min_s},
          {"clip_max_s", c.clip_max_s},
          {"duration_s", c.duration_s},
          {"snr_min_db", c.snr_min_db},
          {"snr_max_db", c.snr_max_db},
          {"event_gain_min_db", c.event_gain_min_db},
          {"event_gain_max_db", c.event_gain_max_db},
          {"sample_rate_hz", c.sample_rate_hz}};
}

namespace {

AdamConfig adam_from_json(const json& j, AdamConfig c, const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("eps", c.eps);
  r.reject_unknown();
  return c;
}

json adam_to_json(const AdamConfig& c) {
  return {{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

template <typename Parse>
auto parse_enum(jsonutil::Reader& r, const std::string& key, Parse parse)
    -> std::optional<decltype(parse(std::string()))> {
  std::string s;
  if (!r.get(key, s)) return std::nullopt;
  try {
    return parse(s);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what(), r.path(key));
  }
}

}  // namespace

TrainingConfig training_config_from_json(const json& j, TrainingConfig c,
                                         const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  if (auto m = parse_enum(r, "mode", parse_training_mode)) c.mode = *m;
  if (auto s = parse_enum(r, "branch_schedule", parse_branch_schedule)) c.branch_schedule = *s;
  r.get("alpha", c.alpha);
  r.get("lr", c.lr);
  r.get("clip_norm", c.clip_norm);
  r.get("max_epochs", c.max_epochs);
  r.get("batch_size", c.batch_size);
  if (r.has("adam")) {
    c.adam = adam_from_json(j.at("adam"), c.adam, r.path("adam"));
    r.mark("adam");
  }
  r.reject_unknown();
  return c;
}

json to_json_value(const TrainingConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"branch_schedule", to_string(c.branch_schedule)},
          {"alpha", c.alpha},
          {"lr", c.lr},
          {"clip_norm", c.clip_norm},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"adam", adam_to_json(c.adam)}};
}

AdaptationConfig adaptation_config_from_json(const json& j, AdaptationConfig c,
                                             const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  if (auto i = parse_enum(r, "init", parse_adapt_init)) c.init = *i;
  r.get("k_shots", c.k_shots);
  r.get("epochs", c.epochs);
  r.get("lr", c.lr);
  r.get("adaptation_mixtures", c.adaptation_mixtures);
  r.get("batch_size", c.batch_size);
  r.get("clip_norm", c.clip_norm);
  if (r.has("adam")) {
    c.adam = adam_from_json(j.at("adam"), c.adam, r.path("adam"));
    r.mark("adam");
  }
  r.reject_unknown();
  return c;
}

json to_json_value(const AdaptationConfig& c) {
  return {{"init", to_string(c.init)},
          {"k_shots", c.k_shots},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"adaptation_mixtures", c.adaptation_mixtures},
          {"batch_size", c.batch_size},
          {"clip_norm", c.clip_norm},
          {"adam", adam_to_json(c.adam)}};
}

MetricConfig metric_config_from_json(const json& j, MetricConfig c, const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  r.get("eps", c.eps);
  r.get("sdr_cap_db", c.sdr_cap_db);
  r.reject_unknown();
  return c;
}

json to_json_value(const MetricConfig& c) {
  return {{"eps", c.eps}, {"sdr_cap_db", c.sdr_cap_db}};
}

}  // namespace detail

void RunConfig::apply_master_seed() {
  bank.seed = derive_seed(seed, {fnv1a("bank")});
  scene.master_seed = derive_seed(seed, {fnv1a("scene")});
  training.seed = derive_seed(seed, {fnv1a("training")});
  adaptation.seed = derive_seed(seed, {fnv1a("adaptation")});
}

void RunConfig::validate() const {
  require(workers >= 1, ErrorCode::kConfig, "must be >= 1", "workers");
  bank.validate();
  scene.validate();
  require(scene.sample_rate_hz == bank.sample_rate_hz, ErrorCode::kConfig,
          "differs from bank.sample_rate_hz", "scene.sample_rate_hz");
  model.validate();
  training.validate();
  adaptation.validate();
  metric.validate();
  require(sizes.train >= 1, ErrorCode::kConfig, "must be >= 1", "sizes.train");
  require(sizes.dev >= 1, ErrorCode::kConfig, "must be >= 1", "sizes.dev");
  require(sizes.test >= 1, ErrorCode::kConfig, "must be >= 1", "sizes.test");
  require(sizes.new_class_test >= 1, ErrorCode::kConfig, "must be >= 1",
          "sizes.new_class_test");
  require(sizes.train_events >= 1, ErrorCode::kConfig, "must be >= 1", "sizes.train_events");
  require(sizes.test_events >= 1, ErrorCode::kConfig, "must be >= 1", "sizes.test_events");
  require(sizes.test_clip_fraction > 0.0 && sizes.test_clip_fraction < 1.0, ErrorCode::kConfig,
          "must be in (0, 1)", "sizes.test_clip_fraction");
  for (const auto& label : held_out) {
    bool known = false;
    for (const auto& c : bank.classes) known = known || c.label == label;
    require(known, ErrorCode::kConfig, "not a bank class: '" + label + "'", "held_out");
  }
  require(held_out.size() < bank.classes.size(), ErrorCode::kConfig,
          "every class is held out", "held_out");
  require(!paths.data_dir.empty(), ErrorCode::kConfig, "empty path", "paths.data_dir");
  require(!paths.runs_dir.empty(), ErrorCode::kConfig, "empty path", "paths.runs_dir");
}

namespace {

RunConfig overlay(const json& j, RunConfig c) {
  jsonutil::Reader r(j, "config");
  r.get("seed", c.seed);
  r.get("workers", c.workers);
  r.get("held_out", c.held_out);
  if (r.has("bank")) {
    const json& b = j.at("bank");
    require(!(b.is_object() && b.contains("seed")), ErrorCode::kConfig,
            "derived from the master seed; set 'seed' instead", "bank.seed");
    c.bank = detail::bank_spec_from_json(b, c.bank, "bank");
    r.mark("bank");
  }
  if (r.has("scene")) {
    c.scene = detail::generator_config_from_json(j.at("scene"), c.scene, "scene");
    r.mark("scene");
  }
  if (r.has("model")) {
    c.model = detail::model_config_from_json(j.at("model"), c.model, "model");
    r.mark("model");
  }
  if (r.has("training")) {
    c.training = detail::training_config_from_json(j.at("training"), c.training, "training");
    r.mark("training");
  }
  if (r.has("adaptation")) {
    c.adaptation =
        detail::adaptation_config_from_json(j.at("adaptation"), c.adaptation, "adaptation");
    r.mark("adaptation");
  }
  if (r.has("metric")) {
    c.metric = detail::metric_config_from_json(j.at("metric"), c.metric, "metric");
    r.mark("metric");
  }
  if (r.has("sizes")) {
    jsonutil::Reader s(j.at("sizes"), "sizes");
    s.get("train", c.sizes.train);
    s.get("dev", c.sizes.dev);
    s.get("test", c.sizes.test);
    s.get("new_class_test", c.sizes.new_class_test);
    s.get("train_events", c.sizes.train_events);
    s.get("test_events", c.sizes.test_events);
    s.get("test_clip_fraction", c.sizes.test_clip_fraction);
    s.reject_unknown();
    r.mark("sizes");
  }
  if (r.has("paths")) {
    jsonutil::Reader p(j.at("paths"), "paths");
    p.get("data_dir", c.paths.data_dir);
    p.get("runs_dir", c.paths.runs_dir);
    p.reject_unknown();
    r.mark("paths");
  }
  r.reject_unknown();
  c.training.metric = c.metric;
  c.adaptation.metric = c.metric;
  c.apply_master_seed();
  return c;
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what(), where);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const RunConfig& base) {
  return overlay(parse_json(text, "config"), base);
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot open config file",
          path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return overlay(parse_json(ss.str(), path.string()), base);
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  json bank = detail::bank_spec_to_json_value(c.bank);
  bank.erase("seed");
  j["bank"] = bank;
  j["scene"] = detail::to_json_value(c.scene);
  j["model"] = detail::to_json_value(c.model);
  j["training"] = detail::to_json_value(c.training);
  j["adaptation"] = detail::to_json_value(c.adaptation);
  j["metric"] = detail::to_json_value(c.metric);
  j["sizes"] = {{"train", c.sizes.train},
                {"dev", c.sizes.dev},
                {"test", c.sizes.test},
                {"new_class_test", c.sizes.new_class_test},
                {"train_events", c.sizes.train_events},
                {"test_events", c.sizes.test_events},
                {"test_clip_fraction", c.sizes.test_clip_fraction}};
  j["held_out"] = c.held_out;
  j["paths"] = {{"data_dir", c.paths.data_dir}, {"runs_dir", c.paths.runs_dir}};
  return j.dump(2);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::kConfig,
          "expected key=value, got '" + assignment + "'", "--set");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = json::object();
  json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    require(!part.empty(), ErrorCode::kConfig, "empty key component", key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
  cfg = overlay(patch, cfg);
}

void apply_path_environment(RunConfig& cfg) {
  if (const char* v = std::getenv("TSE_DATA_DIR"); v != nullptr && *v != '\0') {
    cfg.paths.data_dir = v;
  }
  if (const char* v = std::getenv("TSE_RUNS_DIR"); v != nullptr && *v != '\0') {
    cfg.paths.runs_dir = v;
  }
}

}  // namespace tse
