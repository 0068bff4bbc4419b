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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tse/event_bank.hpp"
#include "tse/metrics.hpp"
#include "tse/model.hpp"
#include "tse/scene.hpp"

namespace tse {

enum class TrainingMode { kOneHot, kEnrollment, kMixed, kMixedEl };
enum class BranchSchedule { kJoint, kAlternate };

std::string to_string(TrainingMode m);
std::string to_string(BranchSchedule s);
TrainingMode parse_training_mode(const std::string& s);
BranchSchedule parse_branch_schedule(const std::string& s);

bool uses_one_hot(TrainingMode m);
bool uses_enrollment(TrainingMode m);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainingConfig {
  TrainingMode mode = TrainingMode::kMixedEl;
  double alpha = 3.0;
  double lr = 1e-4;
  double clip_norm = 5.0;
  int max_epochs = 40;
  int batch_size = 8;
  std::uint64_t seed = 0;
  BranchSchedule branch_schedule = BranchSchedule::kJoint;
  AdamConfig adam;
  MetricConfig metric;

  void validate() const;
};

// Batch means of the loss components. total is formed from the three means
// in a single expression.
struct LossReport {
  double l_ext_enrl = 0.0;
  double l_ext_onehot = 0.0;
  double l_emb = 0.0;
  double total = 0.0;
};

struct TrainingExample {
  Waveform mixture;
  Waveform target_stem;
  std::size_t target_class_index = 0;
  Waveform enrollment;
  std::string scene_id;
  std::string target_source_id;
  std::string enrollment_source_id;
};

// Uniform choice of one event as the target; the enrollment is another clip
// of the same class from `bank`.
TrainingExample select_target(const RenderedScene& scene, const EventBank& bank,
                              const ClassVocabulary& vocab, std::uint64_t seed);

// Gradients for every trainable group of Model<S>.
template <typename S>
struct ModelGrads {
  ParamSet<S> extractor;
  ParamSet<S> enroller;
  Mat<S> embeddings;

  static ModelGrads zeros_like(const Model<S>& model);
  void set_zero();
  double squared_norm() const;
  void scale(S factor);
  bool all_finite() const;
};

// Which extraction branches a step evaluates. Joint runs whatever the mode
// uses; the alternate schedule picks one per step in the mixed modes.
struct BranchMask {
  bool one_hot = true;
  bool enrollment = true;
};
BranchMask branches_for(const TrainingConfig& cfg, std::int64_t step);

// Loss over a batch; when grads is non-null, gradients of the reported total
// are accumulated into it. The pre-conditioning trunk is evaluated once per
// example and shared by both branches.
template <typename S>
LossReport compute_loss(const Model<S>& model, std::span<const TrainingExample> batch,
                        const TrainingConfig& cfg, const BranchMask& branches,
                        std::type_identity_t<ModelGrads<S>>* grads);

// Per-tensor Adam over one parameter group.
template <typename S>
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // Applies one update; `step` counts from 1. With a column mask, only the
  // masked columns of the tensor are touched.
  void update(const std::string& key, Mat<S>& param, const Mat<S>& grad, double lr,
              std::int64_t step, const std::vector<bool>* column_mask = nullptr);

 private:
  struct Moments {
    Mat<S> m;
    Mat<S> v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> state_;
};

struct StepStats {
  LossReport loss;
  double grad_norm = 0.0;
  double post_clip_norm = 0.0;
  bool clipped = false;
  std::uint64_t batch_seed = 0;
};

// Global-norm clipping; returns the pre-clip norm.
template <typename S>
double clip_global_norm(ModelGrads<S>& grads, double clip_norm, bool* clipped = nullptr);

class Trainer {
 public:
  Trainer(Model<float>& model, TrainingConfig cfg);

  StepStats step(std::span<const TrainingExample> batch, std::uint64_t batch_seed);
  std::int64_t steps_taken() const noexcept { return step_; }
  const TrainingConfig& config() const noexcept { return cfg_; }

 private:
  Model<float>& model_;
  TrainingConfig cfg_;
  Adam<float> adam_;
  ModelGrads<float> grads_;
  std::int64_t step_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  LossReport train;
  LossReport dev;
  double mean_grad_norm = 0.0;
  int clipped_steps = 0;
  int steps = 0;
  double seconds = 0.0;
};

struct TrainOptions {
  // JSONL trace with one line per epoch and split; skipped when empty.
  std::filesystem::path trace_path;
  // Best-dev checkpoint; skipped when empty.
  std::filesystem::path checkpoint_path;
  std::function<void(const EpochRecord&)> on_epoch;
  // Stop early once the dev loss has not improved for this many epochs
  // (0 disables).
  int patience = 0;
  // Wall-clock limit in seconds; 0 disables it. Checked between epochs.
  double time_budget_s = 0.0;
};

struct TrainResult {
  Model<float> best;
  int best_epoch = -1;
  double best_dev_loss = 0.0;
  std::vector<EpochRecord> epochs;
};

// The dev set uses one fixed target per scene so its loss is comparable
// across epochs.
std::vector<TrainingExample> make_examples(std::span<const RenderedScene> scenes,
                                           const EventBank& bank,
                                           const ClassVocabulary& vocab,
                                           std::uint64_t seed);

LossReport evaluate_loss(const Model<float>& model,
                         std::span<const TrainingExample> examples,
                         const TrainingConfig& cfg);

TrainResult train(Model<float> model, std::span<const RenderedScene> train_scenes,
                  std::span<const RenderedScene> dev_scenes, const EventBank& bank,
                  const TrainingConfig& cfg, const TrainOptions& options = {});

// Every parameter key of the model with its group prefix; used to check that
// exactly one extraction parameter set exists.
std::vector<std::string> parameter_census(const Model<float>& model);

}  // namespace tse
