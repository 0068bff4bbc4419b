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

#include "tse/adaptation.hpp"

#include <cmath>
#include <numeric>

#include "tse/conditioning.hpp"
#include "tse/embedding.hpp"
#include "tse/error.hpp"
#include "tse/network.hpp"
#include "tse/rng.hpp"

namespace tse {

std::string to_string(AdaptInit init) {
  return init == AdaptInit::kAverage ? "avg" : "random";
}

AdaptInit parse_adapt_init(const std::string& s) {
  if (s == "avg") return AdaptInit::kAverage;
  if (s == "random" || s == "rand") return AdaptInit::kRandom;
  fail(ErrorCode::kConfig, "unknown init '" + s + "' (avg, random)");
}

void AdaptationConfig::validate() const {
  require(k_shots >= 1, ErrorCode::kConfig, "must be >= 1", "adaptation.k_shots");
  require(epochs >= 0, ErrorCode::kConfig, "must be >= 0", "adaptation.epochs");
  require(lr > 0.0, ErrorCode::kConfig, "must be positive", "adaptation.lr");
  require(adaptation_mixtures >= 1, ErrorCode::kConfig, "must be >= 1",
          "adaptation.adaptation_mixtures");
  require(batch_size >= 1, ErrorCode::kConfig, "must be >= 1", "adaptation.batch_size");
  require(clip_norm > 0.0, ErrorCode::kConfig, "must be positive", "adaptation.clip_norm");
  metric.validate();
}

EventBank merge_banks(const EventBank& base, std::span<const NewClassShots> extra) {
  std::vector<EventClip> clips = base.clips();
  for (const auto& c : extra) {
    for (const auto& shot : c.shots) {
      require(shot.class_label == c.label, ErrorCode::kInvalidArgument,
              "shot belongs to another class", shot.source_id);
      clips.push_back(shot);
    }
  }
  return EventBank(std::move(clips));
}

std::vector<RenderedScene> build_adaptation_set(const EventBank& train_bank,
                                                const NewClassShots& new_class,
                                                const EventBank& noise_bank,
                                                const GeneratorConfig& generator,
                                                const AdaptationConfig& cfg, int workers) {
  cfg.validate();
  require(!new_class.shots.empty(), ErrorCode::kInvalidArgument, "K-shot pool is empty",
          new_class.label);
  require(new_class.shots.size() == static_cast<std::size_t>(cfg.k_shots),
          ErrorCode::kInvalidArgument,
          "expected " + std::to_string(cfg.k_shots) + " shots, got " +
              std::to_string(new_class.shots.size()),
          new_class.label);
  require(!train_bank.has_class(new_class.label), ErrorCode::kInvalidArgument,
          "new class already present in the training bank", new_class.label);
  const EventBank bank = merge_banks(train_bank, std::span(&new_class, 1));
  SceneConstraints constraints;
  constraints.class_pool = train_bank.labels();
  constraints.forced_class = new_class.label;
  for (const auto& s : new_class.shots) constraints.forced_sources.push_back(s.source_id);
  GeneratorConfig gen = generator;
  gen.master_seed = derive_seed(cfg.seed, {fnv1a("adaptation-set"), fnv1a(new_class.label)});
  return generate_scenes(bank, noise_bank, gen, static_cast<std::size_t>(cfg.adaptation_mixtures),
                         "adapt_" + new_class.label, constraints, workers);
}

namespace {

struct CachedScene {
  ExtractionNet<float>::Trunk trunk;
  std::vector<double> target;
};

// Trunk activations do not depend on the embedding and every network weight
// is frozen, so they are computed once per scene.
std::vector<CachedScene> cache_trunks(const ExtractionNet<float>& net,
                                      const std::vector<RenderedScene>& scenes,
                                      const std::string& label) {
  std::vector<CachedScene> out(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    require(s.manifest.target_class == label, ErrorCode::kInvalidArgument,
            "adaptation scene targets another class", s.manifest.scene_id);
    const auto y = to_scalar<float>(s.mixture.samples());
    net.run_trunk(y, out[i].trunk, false);
    auto& front = out[i].trunk.front;
    front.frames.resize(0, 0);
    front.normed.resize(0, 0);
    front.norm.normalized.resize(0, 0);
    const Waveform target = s.stem_of(label);
    out[i].target.assign(target.samples().begin(), target.samples().end());
  }
  return out;
}

double mean_loss(const ExtractionNet<float>& net, const std::vector<CachedScene>& cache,
                 const Vec<float>& e, const MetricConfig& metric) {
  double sum = 0.0;
  for (const auto& c : cache) {
    ExtractionNet<float>::Head head;
    net.run_head(c.trunk, e, head, false);
    const std::vector<double> out(head.output.begin(), head.output.end());
    sum += neg_snr_loss(out, c.target, metric);
  }
  return sum / static_cast<double>(cache.size());
}

}  // namespace

AdaptationResult adapt(const Checkpoint& checkpoint, std::span<const NewClassShots> classes,
                       std::span<const std::vector<RenderedScene>> sets,
                       const AdaptationConfig& cfg) {
  cfg.validate();
  require(classes.size() == sets.size(), ErrorCode::kInvalidArgument,
          "one adaptation set per new class is required");
  require(checkpoint.meta.mode != "enrollment", ErrorCode::kInvalidArgument,
          "checkpoint was trained without a 1-hot pathway", checkpoint.meta.mode);
  AdaptationResult result;
  result.model = checkpoint.model;
  Model<float>& model = result.model;
  const int dim = model.config.embed_dim;

  for (const auto& c : classes) {
    require(!c.shots.empty(), ErrorCode::kInvalidArgument, "no shots", c.label);
    NewClassRegistration reg;
    reg.label = c.label;
    reg.init = cfg.init;
    for (const auto& s : c.shots) reg.shot_ids.push_back(s.source_id);
    if (cfg.init == AdaptInit::kAverage) {
      std::vector<Waveform> shots;
      for (const auto& s : c.shots) shots.push_back(s.waveform);
      reg.initial = average_embeddings(model, std::span<const Waveform>(shots));
    } else {
      reg.initial = EmbeddingMatrix<float>::random(
                        dim, 1, derive_seed(cfg.seed, {fnv1a("random-init"), fnv1a(c.label)}))
                        .column(0);
    }
    auto added = register_class(model.embeddings, model.vocabulary, c.label, reg.initial, true);
    model.embeddings = std::move(added.matrix);
    model.vocabulary = std::move(added.vocabulary);
    reg.column = added.index;
    result.registrations.push_back(std::move(reg));
  }

  const ExtractionNet<float> net(model.config, model.extractor);
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    NewClassRegistration& reg = result.registrations[ci];
    const auto cache = cache_trunks(net, sets[ci], reg.label);
    require(!cache.empty(), ErrorCode::kInvalidArgument, "empty adaptation set", reg.label);
    Mat<float> column = reg.initial;
    Adam<float> adam(cfg.adam);
    reg.initial_loss = mean_loss(net, cache, column.col(0), cfg.metric);

    std::vector<std::size_t> order(cache.size());
    std::int64_t step = 0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(cfg.seed, {fnv1a(reg.label), static_cast<std::uint64_t>(epoch)}));
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t end = std::min(order.size(), start + bs);
        const double inv = 1.0 / static_cast<double>(end - start);
        Mat<float> grad = Mat<float>::Zero(dim, 1);
        const Vec<float> e = column.col(0);
        for (std::size_t j = start; j < end; ++j) {
          const CachedScene& c = cache[order[j]];
          ExtractionNet<float>::Head head;
          net.run_head(c.trunk, e, head, true);
          const std::vector<double> out(head.output.begin(), head.output.end());
          std::vector<double> g(out.size());
          epoch_sum += neg_snr_loss_with_grad(out, c.target, g, cfg.metric);
          std::vector<float> gs(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) gs[i] = static_cast<float>(g[i] * inv);
          Mat<float> d_z, d_encoded;
          Vec<float> d_e;
          net.backward_head(c.trunk, head, gs, nullptr, d_z, d_encoded, &d_e);
          grad.col(0) += d_e;
        }
        require(grad.allFinite(), ErrorCode::kNumeric, "non-finite adaptation gradient",
                reg.label);
        const double norm = grad.cast<double>().norm();
        if (norm > cfg.clip_norm) grad *= static_cast<float>(cfg.clip_norm / norm);
        adam.update(reg.label, column, grad, cfg.lr, ++step);
      }
      reg.epoch_losses.push_back(epoch_sum / static_cast<double>(cache.size()));
    }
    reg.adapted = column.col(0);
    reg.final_loss = mean_loss(net, cache, reg.adapted, cfg.metric);
    model.embeddings.mutable_values().col(static_cast<Eigen::Index>(reg.column)) = reg.adapted;
  }
  return result;
}

Vec<float> embed_for_class(const Model<float>& model, const std::string& label,
                           std::span<const Waveform> shots) {
  if (!shots.empty()) return average_embeddings(model, shots);
  require(model.vocabulary.contains(label), ErrorCode::kOutOfRange,
          "unknown class and no enrollment shots given", label);
  return class_embedding(model, label);
}

}  // namespace tse
