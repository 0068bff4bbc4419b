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

#include "tse/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tse/checkpoint.hpp"
#include "tse/conditioning.hpp"
#include "tse/error.hpp"
#include "tse/network.hpp"
#include "tse/rng.hpp"

namespace tse {

std::string to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::kOneHot: return "one_hot";
    case TrainingMode::kEnrollment: return "enrollment";
    case TrainingMode::kMixed: return "mixed";
    case TrainingMode::kMixedEl: return "mixed_el";
  }
  return "?";
}

std::string to_string(BranchSchedule s) {
  return s == BranchSchedule::kJoint ? "joint" : "alternate";
}

TrainingMode parse_training_mode(const std::string& s) {
  for (auto m : {TrainingMode::kOneHot, TrainingMode::kEnrollment, TrainingMode::kMixed,
                 TrainingMode::kMixedEl}) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorCode::kConfig, "unknown training mode '" + s +
                               "' (one_hot, enrollment, mixed, mixed_el)");
}

BranchSchedule parse_branch_schedule(const std::string& s) {
  if (s == "joint") return BranchSchedule::kJoint;
  if (s == "alternate") return BranchSchedule::kAlternate;
  fail(ErrorCode::kConfig, "unknown branch schedule '" + s + "' (joint, alternate)");
}

bool uses_one_hot(TrainingMode m) { return m != TrainingMode::kEnrollment; }
bool uses_enrollment(TrainingMode m) { return m != TrainingMode::kOneHot; }

void TrainingConfig::validate() const {
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::kConfig, "must be >= 0",
          "training.alpha");
  require(lr > 0.0, ErrorCode::kConfig, "must be positive", "training.lr");
  require(clip_norm > 0.0, ErrorCode::kConfig, "must be positive", "training.clip_norm");
  require(max_epochs >= 1, ErrorCode::kConfig, "must be >= 1", "training.max_epochs");
  require(batch_size >= 1, ErrorCode::kConfig, "must be >= 1", "training.batch_size");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, ErrorCode::kConfig, "must be in [0, 1)",
          "training.adam.beta1");
  require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, ErrorCode::kConfig, "must be in [0, 1)",
          "training.adam.beta2");
  require(adam.eps > 0.0, ErrorCode::kConfig, "must be positive", "training.adam.eps");
  metric.validate();
}

TrainingExample select_target(const RenderedScene& scene, const EventBank& bank,
                              const ClassVocabulary& vocab, std::uint64_t seed) {
  const auto& events = scene.manifest.events;
  require(!events.empty() && scene.stems.size() == events.size(), ErrorCode::kInvalidArgument,
          "scene stems missing or incomplete", scene.manifest.scene_id);
  Rng rng(seed);
  const std::size_t k = uniform_index(rng, events.size());
  const SceneEvent& target = events[k];
  require(!scene.stems[k].empty(), ErrorCode::kIo, "stem " + std::to_string(k) + " is missing",
          scene.manifest.scene_id);
  const auto picked =
      pick_enrollment_clips(bank, target.class_label, target.source_id, 1, rng());
  TrainingExample ex;
  ex.mixture = scene.mixture;
  ex.target_stem = scene.stems[k];
  ex.target_class_index = vocab.index_of(target.class_label);
  ex.enrollment = picked.front()->waveform;
  ex.scene_id = scene.manifest.scene_id;
  ex.target_source_id = target.source_id;
  ex.enrollment_source_id = picked.front()->source_id;
  return ex;
}

template <typename S>
ModelGrads<S> ModelGrads<S>::zeros_like(const Model<S>& model) {
  return ModelGrads{model.extractor.zeros_like(), model.enroller.zeros_like(),
                    Mat<S>::Zero(model.embeddings.dim(), model.embeddings.num_classes())};
}

template <typename S>
void ModelGrads<S>::set_zero() {
  extractor.set_zero();
  enroller.set_zero();
  embeddings.setZero();
}

template <typename S>
double ModelGrads<S>::squared_norm() const {
  return extractor.squared_norm() + enroller.squared_norm() +
         embeddings.template cast<double>().squaredNorm();
}

template <typename S>
void ModelGrads<S>::scale(S factor) {
  extractor.scale(factor);
  enroller.scale(factor);
  embeddings *= factor;
}

template <typename S>
bool ModelGrads<S>::all_finite() const {
  return extractor.all_finite() && enroller.all_finite() && embeddings.allFinite();
}

BranchMask branches_for(const TrainingConfig& cfg, std::int64_t step) {
  BranchMask mask{uses_one_hot(cfg.mode), uses_enrollment(cfg.mode)};
  const bool mixed = cfg.mode == TrainingMode::kMixed || cfg.mode == TrainingMode::kMixedEl;
  if (mixed && cfg.branch_schedule == BranchSchedule::kAlternate) {
    mask.enrollment = step % 2 == 0;
    mask.one_hot = !mask.enrollment;
  }
  return mask;
}

namespace {

template <typename S>
std::vector<double> to_double(const Vec<S>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

template <typename S>
LossReport compute_loss(const Model<S>& model, std::span<const TrainingExample> batch,
                        const TrainingConfig& cfg, const BranchMask& branches,
                        std::type_identity_t<ModelGrads<S>>* grads) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  const bool el = cfg.mode == TrainingMode::kMixedEl;
  const bool run_enrl = uses_enrollment(cfg.mode) && branches.enrollment;
  const bool run_onehot = uses_one_hot(cfg.mode) && branches.one_hot;
  const bool need_enrl = run_enrl || el;
  const bool need_onehot = run_onehot || el;
  const bool train = grads != nullptr;
  const double inv = 1.0 / static_cast<double>(batch.size());

  ExtractionNet<S> net(model.config, model.extractor);
  EnrollmentEncoder<S> encoder(model.config, model.enroller);
  const Eigen::Index dim = model.config.embed_dim;

  double sum_enrl = 0.0, sum_onehot = 0.0, sum_emb = 0.0;
  for (const TrainingExample& ex : batch) {
    require(ex.mixture.size() == ex.target_stem.size(), ErrorCode::kShapeMismatch,
            "target length differs from mixture", ex.scene_id);
    require(!need_enrl || !ex.enrollment.empty(), ErrorCode::kInvalidArgument,
            "mode " + to_string(cfg.mode) + " needs an enrollment sample", ex.scene_id);
    require(!need_onehot || ex.target_class_index < model.vocabulary.size(),
            ErrorCode::kOutOfRange, "target class index outside the vocabulary", ex.scene_id);

    const auto y = to_scalar<S>(ex.mixture.samples());
    const auto x = ex.target_stem.samples();
    typename ExtractionNet<S>::Trunk trunk;
    net.run_trunk(y, trunk, train);

    typename EnrollmentEncoder<S>::Tape tape;
    Vec<S> e_enrl, e_onehot;
    if (need_enrl) {
      const auto a = to_scalar<S>(ex.enrollment.samples());
      e_enrl = encoder.encode(a, train ? &tape : nullptr);
    }
    if (need_onehot) e_onehot = model.embeddings.column(ex.target_class_index);

    Vec<S> d_enrl = Vec<S>::Zero(dim), d_onehot = Vec<S>::Zero(dim);
    Mat<S> d_z, d_encoded;
    bool have_trunk_grad = false;
    auto branch = [&](const Vec<S>& e, Vec<S>& d_e) {
      typename ExtractionNet<S>::Head head;
      net.run_head(trunk, e, head, train);
      const std::vector<double> out(head.output.begin(), head.output.end());
      if (!train) return neg_snr_loss(out, x, cfg.metric);
      std::vector<double> g(out.size());
      const double loss = neg_snr_loss_with_grad(out, x, g, cfg.metric);
      std::vector<S> gs(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gs[i] = static_cast<S>(g[i] * inv);
      Mat<S> bz, benc;
      Vec<S> be;
      net.backward_head(trunk, head, gs, &grads->extractor, bz, benc, &be);
      if (have_trunk_grad) {
        d_z += bz;
        d_encoded += benc;
      } else {
        d_z = std::move(bz);
        d_encoded = std::move(benc);
        have_trunk_grad = true;
      }
      d_e += be;
      return loss;
    };
    if (run_enrl) sum_enrl += branch(e_enrl, d_enrl);
    if (run_onehot) sum_onehot += branch(e_onehot, d_onehot);
    if (el) {
      const auto u = to_double(e_enrl), v = to_double(e_onehot);
      if (train) {
        std::vector<double> gu(u.size()), gv(v.size());
        sum_emb += cosine_distance_with_grad(u, v, gu, gv);
        for (Eigen::Index i = 0; i < dim; ++i) {
          d_enrl(i) += static_cast<S>(cfg.alpha * inv * gu[i]);
          d_onehot(i) += static_cast<S>(cfg.alpha * inv * gv[i]);
        }
      } else {
        sum_emb += cosine_distance(u, v);
      }
    }
    if (train) {
      if (have_trunk_grad) net.backward_trunk(trunk, d_z, d_encoded, grads->extractor);
      if (need_enrl) encoder.backward(tape, d_enrl, grads->enroller);
      if (need_onehot) grads->embeddings.col(ex.target_class_index) += d_onehot;
    }
  }
  LossReport r;
  r.l_ext_enrl = sum_enrl * inv;
  r.l_ext_onehot = sum_onehot * inv;
  r.l_emb = sum_emb * inv;
  const double alpha = el ? cfg.alpha : 0.0;
  r.total = r.l_ext_enrl + r.l_ext_onehot + alpha * r.l_emb;
  return r;
}

template <typename S>
void Adam<S>::update(const std::string& key, Mat<S>& param, const Mat<S>& grad, double lr,
                     std::int64_t step, const std::vector<bool>* column_mask) {
  require(param.rows() == grad.rows() && param.cols() == grad.cols(),
          ErrorCode::kShapeMismatch, "gradient shape differs from parameter", key);
  Moments& mo = state_[key];
  if (mo.m.rows() != param.rows() || mo.m.cols() != param.cols()) {
    mo.m = Mat<S>::Zero(param.rows(), param.cols());
    mo.v = Mat<S>::Zero(param.rows(), param.cols());
  }
  const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
  const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(step))));
  const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(step))));
  const S rate = static_cast<S>(lr), eps = static_cast<S>(cfg_.eps);
  auto apply = [&](auto p, auto g, auto m, auto v) {
    m = b1 * m + (S(1) - b1) * g;
    v = b2 * v + (S(1) - b2) * g.square();
    p -= rate * (m * c1) / ((v * c2).sqrt() + eps);
  };
  if (column_mask == nullptr) {
    apply(param.array(), grad.array(), mo.m.array(), mo.v.array());
    return;
  }
  for (Eigen::Index c = 0; c < param.cols(); ++c) {
    if (!(*column_mask)[static_cast<std::size_t>(c)]) continue;
    apply(param.col(c).array(), grad.col(c).array(), mo.m.col(c).array(),
          mo.v.col(c).array());
  }
}

template <typename S>
double clip_global_norm(ModelGrads<S>& grads, double clip_norm, bool* clipped) {
  const double norm = std::sqrt(grads.squared_norm());
  const bool engage = norm > clip_norm;
  if (engage) grads.scale(static_cast<S>(clip_norm / norm));
  if (clipped != nullptr) *clipped = engage;
  return norm;
}

Trainer::Trainer(Model<float>& model, TrainingConfig cfg)
    : model_(model),
      cfg_(std::move(cfg)),
      adam_(cfg_.adam),
      grads_(ModelGrads<float>::zeros_like(model)) {
  cfg_.validate();
}

StepStats Trainer::step(std::span<const TrainingExample> batch, std::uint64_t batch_seed) {
  grads_.set_zero();
  StepStats stats;
  stats.batch_seed = batch_seed;
  stats.loss = compute_loss(model_, batch, cfg_, branches_for(cfg_, step_), &grads_);
  if (!std::isfinite(stats.loss.total) || !grads_.all_finite()) {
    fail(ErrorCode::kNumeric,
         "non-finite loss or gradient at step " + std::to_string(step_) + " (total " +
             std::to_string(stats.loss.total) + ")",
         "batch seed " + std::to_string(batch_seed));
  }
  stats.grad_norm = clip_global_norm(grads_, cfg_.clip_norm, &stats.clipped);
  stats.post_clip_norm = stats.clipped ? std::sqrt(grads_.squared_norm()) : stats.grad_norm;
  ++step_;
  for (auto& [key, p] : model_.extractor.tensors()) {
    adam_.update("ext/" + key, p, grads_.extractor.at(key), cfg_.lr, step_);
  }
  if (uses_enrollment(cfg_.mode)) {
    for (auto& [key, p] : model_.enroller.tensors()) {
      adam_.update("enr/" + key, p, grads_.enroller.at(key), cfg_.lr, step_);
    }
  }
  if (uses_one_hot(cfg_.mode)) {
    adam_.update("emb/W", model_.embeddings.mutable_values(), grads_.embeddings, cfg_.lr,
                 step_, &model_.embeddings.trainable_flags());
  }
  return stats;
}

std::vector<TrainingExample> make_examples(std::span<const RenderedScene> scenes,
                                           const EventBank& bank,
                                           const ClassVocabulary& vocab,
                                           std::uint64_t seed) {
  std::vector<TrainingExample> out;
  out.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    out.push_back(select_target(scenes[i], bank, vocab, derive_seed(seed, {i})));
  }
  return out;
}

LossReport evaluate_loss(const Model<float>& model, std::span<const TrainingExample> examples,
                         const TrainingConfig& cfg) {
  return compute_loss<float>(model, examples, cfg,
                             BranchMask{uses_one_hot(cfg.mode), uses_enrollment(cfg.mode)},
                             nullptr);
}

namespace {

nlohmann::ordered_json loss_json(const LossReport& r) {
  return {{"l_ext_enrl", r.l_ext_enrl},
          {"l_ext_onehot", r.l_ext_onehot},
          {"l_emb", r.l_emb},
          {"total", r.total}};
}

void accumulate(LossReport& acc, const LossReport& r, double w) {
  acc.l_ext_enrl += w * r.l_ext_enrl;
  acc.l_ext_onehot += w * r.l_ext_onehot;
  acc.l_emb += w * r.l_emb;
  acc.total += w * r.total;
}

}  // namespace

TrainResult train(Model<float> model, std::span<const RenderedScene> train_scenes,
                  std::span<const RenderedScene> dev_scenes, const EventBank& bank,
                  const TrainingConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  require(!train_scenes.empty(), ErrorCode::kInvalidArgument, "empty training set");
  require(!dev_scenes.empty(), ErrorCode::kInvalidArgument, "empty dev set");
  const auto dev =
      make_examples(dev_scenes, bank, model.vocabulary, derive_seed(cfg.seed, {fnv1a("dev")}));

  std::ofstream trace;
  if (!options.trace_path.empty()) {
    if (options.trace_path.has_parent_path()) {
      std::filesystem::create_directories(options.trace_path.parent_path());
    }
    trace.open(options.trace_path, std::ios::trunc);
    require(static_cast<bool>(trace), ErrorCode::kIo, "cannot write training trace",
            options.trace_path.string());
  }

  Trainer trainer(model, cfg);
  TrainResult result;
  result.best = model;
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_scenes.size());
  int since_best = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const auto run_start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, {fnv1a("epoch"), static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    double norm_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += bs, ++b) {
      const std::uint64_t batch_seed =
          derive_seed(cfg.seed, {fnv1a("batch"), static_cast<std::uint64_t>(epoch), b});
      std::vector<TrainingExample> batch;
      for (std::size_t j = start; j < std::min(order.size(), start + bs); ++j) {
        batch.push_back(select_target(train_scenes[order[j]], bank, model.vocabulary,
                                      derive_seed(batch_seed, {j - start})));
      }
      const StepStats st = trainer.step(batch, batch_seed);
      accumulate(rec.train, st.loss, static_cast<double>(batch.size()));
      seen += batch.size();
      norm_sum += st.grad_norm;
      rec.clipped_steps += st.clipped ? 1 : 0;
      ++rec.steps;
    }
    const double w = 1.0 / static_cast<double>(seen);
    rec.train.l_ext_enrl *= w;
    rec.train.l_ext_onehot *= w;
    rec.train.l_emb *= w;
    rec.train.total *= w;
    rec.mean_grad_norm = norm_sum / rec.steps;
    rec.dev = evaluate_loss(model, dev, cfg);
    require(std::isfinite(rec.dev.total), ErrorCode::kNumeric, "non-finite dev loss",
            "epoch " + std::to_string(epoch));
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (trace.is_open()) {
      nlohmann::ordered_json line = {{"epoch", epoch}, {"split", "train"}};
      line.update(loss_json(rec.train));
      line["mean_grad_norm"] = rec.mean_grad_norm;
      line["clipped_steps"] = rec.clipped_steps;
      line["steps"] = rec.steps;
      trace << line.dump() << '\n';
      nlohmann::ordered_json dev_line = {{"epoch", epoch}, {"split", "dev"}};
      dev_line.update(loss_json(rec.dev));
      trace << dev_line.dump() << '\n' << std::flush;
    }

    if (rec.dev.total < result.best_dev_loss) {
      result.best_dev_loss = rec.dev.total;
      result.best_epoch = epoch;
      result.best = model;
      since_best = 0;
      if (!options.checkpoint_path.empty()) {
        save_checkpoint(options.checkpoint_path, model,
                        CheckpointMeta{to_string(cfg.mode), epoch, rec.dev.total, cfg.seed, {}});
      }
    } else {
      ++since_best;
    }
    result.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (options.patience > 0 && since_best >= options.patience) break;
    if (options.time_budget_s > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
      // Stop when another epoch like the slowest one so far would overrun.
      double slowest = 0.0;
      for (const auto& e : result.epochs) slowest = std::max(slowest, e.seconds);
      if (elapsed + slowest > options.time_budget_s) break;
    }
  }
  return result;
}

std::vector<std::string> parameter_census(const Model<float>& model) {
  std::vector<std::string> keys;
  for (const auto& k : model.extractor.keys()) keys.push_back("ext/" + k);
  for (const auto& k : model.enroller.keys()) keys.push_back("enr/" + k);
  keys.push_back("emb/W");
  return keys;
}

#define TSE_INSTANTIATE_TRAINING(S)                                                    \
  template struct ModelGrads<S>;                                                       \
  template class Adam<S>;                                                              \
  template LossReport compute_loss<S>(const Model<S>&, std::span<const TrainingExample>, \
                                      const TrainingConfig&, const BranchMask&,         \
                                      ModelGrads<S>*);                                 \
  template double clip_global_norm<S>(ModelGrads<S>&, double, bool*);

TSE_INSTANTIATE_TRAINING(float)
TSE_INSTANTIATE_TRAINING(double)

}  // namespace tse
