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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tse/event_bank.hpp"
#include "tse/metrics.hpp"
#include "tse/model.hpp"
#include "tse/scene.hpp"

namespace tse {

enum class EmbeddingSource { kOneHot, kEnrollment, kAverageK, kAdapted };
std::string to_string(EmbeddingSource s);
EmbeddingSource parse_embedding_source(const std::string& s);

struct EvalRecord {
  std::string scene_id;
  std::string target_class;
  std::string embedding_source;  // one_hot | enrollment | avg_k | adapted
  int k = 0;                     // enrollment shots used; 0 for 1-hot columns
  std::string model;             // training mode of the evaluated model
  std::string test_set;          // seen | new | new_seen
  std::string init;              // adaptation init, empty when not adapted
  double sdr_mixture_db = 0.0;
  double sdr_estimate_db = 0.0;
  double sdri_db = 0.0;
  std::string error;             // non-empty when the trial failed

  bool ok() const { return error.empty(); }
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

std::string record_to_json(const EvalRecord& r);
EvalRecord record_from_json(const std::string& line);
void write_records(const std::filesystem::path& path, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

// Builds a record from an estimate; sdri = sdr_estimate - sdr_mixture.
EvalRecord score_trial(std::span<const double> estimate, std::span<const double> mixture,
                       std::span<const double> target, const MetricConfig& metric);

enum class TargetSelection {
  kAllEvents,       // every event of the scene is a target once
  kManifestTarget,  // only manifest.target_class
  kOtherEvents,     // every event except manifest.target_class
};

struct EmbeddingPolicy {
  EmbeddingSource source = EmbeddingSource::kOneHot;
  int k = 1;  // shots for enrollment (1) and avg_k
  std::uint64_t seed = 0;
};

struct EvalOptions {
  TargetSelection targets = TargetSelection::kAllEvents;
  std::string model_tag;
  std::string test_set = "seen";
  std::string init_tag;
  MetricConfig metric;
  int workers = 1;
};

// Extracts every selected target of every scene. Enrollment clips are drawn
// from `enrollment_bank`, never the target's own source clip. Failures are
// kept as record-level errors. Output order follows scenes and events.
std::vector<EvalRecord> evaluate(const Model<float>& model,
                                 std::span<const RenderedScene> scenes,
                                 const EventBank& enrollment_bank,
                                 const EmbeddingPolicy& policy, const EvalOptions& options);

struct SummaryRow {
  std::map<std::string, std::string> key;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

// Groups successful records by the named fields (any EvalRecord string
// field, or "k"); rows are sorted by key.
std::vector<SummaryRow> summarize(std::span<const EvalRecord> records,
                                  const std::vector<std::string>& fields);

struct ReportOptions {
  bool reference_rows = false;
};

// Embedding at test time x model, over test_set == "seen".
std::string render_table1(std::span<const EvalRecord> records, const ReportOptions& o = {});
// Model (+ adaptation init) x {seen, K=1, K=5, K=10}, over the "new_seen"
// and "new" test sets.
std::string render_table2(std::span<const EvalRecord> records, const ReportOptions& o = {});
// Mean SDRi per target class for one test set.
std::string render_per_class(std::span<const EvalRecord> records, const std::string& test_set);
std::string render_errors(std::span<const EvalRecord> records);
// Horizontal bar chart of per-class mean SDRi, one series per
// (model, embedding_source, k, init) condition.
std::string render_per_class_svg(std::span<const EvalRecord> records,
                                 const std::string& test_set);

}  // namespace tse
