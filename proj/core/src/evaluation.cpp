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

#include "tse/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "tse/conditioning.hpp"
#include "tse/error.hpp"
#include "tse/network.hpp"
#include "tse/parallel.hpp"
#include "tse/rng.hpp"

namespace tse {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double number_or_nan(const json& j, const char* key) {
  const json& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}

}  // namespace

std::string to_string(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::kOneHot: return "one_hot";
    case EmbeddingSource::kEnrollment: return "enrollment";
    case EmbeddingSource::kAverageK: return "avg_k";
    case EmbeddingSource::kAdapted: return "adapted";
  }
  return "?";
}

EmbeddingSource parse_embedding_source(const std::string& s) {
  for (auto v : {EmbeddingSource::kOneHot, EmbeddingSource::kEnrollment,
                 EmbeddingSource::kAverageK, EmbeddingSource::kAdapted}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::kConfig,
       "unknown embedding policy '" + s + "' (one_hot, enrollment, avg_k, adapted)");
}

std::string record_to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["scene_id"] = r.scene_id;
  j["target_class"] = r.target_class;
  j["embedding_source"] = r.embedding_source;
  j["k"] = r.k;
  j["model"] = r.model;
  j["test_set"] = r.test_set;
  j["init"] = r.init;
  j["sdr_mixture_db"] = r.sdr_mixture_db;
  j["sdr_estimate_db"] = r.sdr_estimate_db;
  j["sdri_db"] = r.sdri_db;
  j["error"] = r.error;
  return j.dump();
}

EvalRecord record_from_json(const std::string& line) {
  EvalRecord r;
  try {
    const json j = json::parse(line);
    r.scene_id = j.at("scene_id").get<std::string>();
    r.target_class = j.at("target_class").get<std::string>();
    r.embedding_source = j.at("embedding_source").get<std::string>();
    r.k = j.at("k").get<int>();
    r.model = j.at("model").get<std::string>();
    r.test_set = j.at("test_set").get<std::string>();
    r.init = j.at("init").get<std::string>();
    r.sdr_mixture_db = number_or_nan(j, "sdr_mixture_db");
    r.sdr_estimate_db = number_or_nan(j, "sdr_estimate_db");
    r.sdri_db = number_or_nan(j, "sdri_db");
    r.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad record: ") + e.what(), "records");
  }
  return r;
}

void write_records(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write records", path.string());
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open records", path.string());
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      fail(e.code(), e.what(), path.string() + ":" + std::to_string(lineno));
    }
  }
  return out;
}

EvalRecord score_trial(std::span<const double> estimate, std::span<const double> mixture,
                       std::span<const double> target, const MetricConfig& metric) {
  EvalRecord r;
  r.sdr_estimate_db = si_sdr(estimate, target, metric);
  r.sdr_mixture_db = si_sdr(mixture, target, metric);
  r.sdri_db = r.sdr_estimate_db - r.sdr_mixture_db;
  return r;
}

std::vector<EvalRecord> evaluate(const Model<float>& model,
                                 std::span<const RenderedScene> scenes,
                                 const EventBank& enrollment_bank,
                                 const EmbeddingPolicy& policy, const EvalOptions& options) {
  require(policy.k >= 1, ErrorCode::kInvalidArgument, "k must be >= 1", "policy.k");
  const ExtractionNet<float> net(model.config, model.extractor);
  std::vector<std::vector<EvalRecord>> per_scene(scenes.size());

  parallel_for(scenes.size(), options.workers, [&](std::size_t si) {
    const RenderedScene& scene = scenes[si];
    const SceneManifest& m = scene.manifest;
    std::optional<ExtractionNet<float>::Trunk> trunk;
    std::vector<double> mixture(scene.mixture.samples().begin(), scene.mixture.samples().end());
    for (std::size_t ei = 0; ei < m.events.size(); ++ei) {
      const SceneEvent& ev = m.events[ei];
      const bool is_target = ev.class_label == m.target_class;
      if (options.targets == TargetSelection::kManifestTarget && !is_target) continue;
      if (options.targets == TargetSelection::kOtherEvents && is_target) continue;
      EvalRecord rec;
      rec.scene_id = m.scene_id;
      rec.target_class = ev.class_label;
      rec.embedding_source = to_string(policy.source);
      rec.k = policy.source == EmbeddingSource::kOneHot      ? 0
              : policy.source == EmbeddingSource::kEnrollment ? 1
                                                              : policy.k;
      rec.model = options.model_tag;
      rec.test_set = options.test_set;
      rec.init = options.init_tag;
      try {
        require(scene.stems.size() == m.events.size(), ErrorCode::kInvalidArgument,
                "missing stem", m.scene_id + "/" + std::to_string(ei));
        Vec<float> e;
        const std::uint64_t seed =
            derive_seed(policy.seed, {fnv1a(m.scene_id), static_cast<std::uint64_t>(ei)});
        switch (policy.source) {
          case EmbeddingSource::kOneHot:
          case EmbeddingSource::kAdapted:
            require(model.vocabulary.contains(ev.class_label), ErrorCode::kOutOfRange,
                    "class has no embedding column", ev.class_label);
            e = class_embedding(model, ev.class_label);
            break;
          case EmbeddingSource::kEnrollment:
          case EmbeddingSource::kAverageK: {
            const int k = policy.source == EmbeddingSource::kEnrollment ? 1 : policy.k;
            const auto shots =
                pick_enrollment(enrollment_bank, ev.class_label, ev.source_id, k, seed);
            e = average_embeddings(model, std::span<const Waveform>(shots));
            break;
          }
        }
        if (!trunk) {
          trunk.emplace();
          const auto y = to_scalar<float>(scene.mixture.samples());
          net.run_trunk(y, *trunk, false);
        }
        ExtractionNet<float>::Head head;
        net.run_head(*trunk, e, head, false);
        const std::vector<double> estimate(head.output.begin(), head.output.end());
        const Waveform target = scene.stem_of(ev.class_label);
        const EvalRecord scored =
            score_trial(estimate, mixture, target.samples(), options.metric);
        rec.sdr_estimate_db = scored.sdr_estimate_db;
        rec.sdr_mixture_db = scored.sdr_mixture_db;
        rec.sdri_db = scored.sdri_db;
      } catch (const Error& err) {
        rec.error = err.what();
        rec.sdr_estimate_db = rec.sdr_mixture_db = rec.sdri_db = kNaN;
      }
      per_scene[si].push_back(std::move(rec));
    }
  });

  std::vector<EvalRecord> out;
  for (auto& v : per_scene) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tse
