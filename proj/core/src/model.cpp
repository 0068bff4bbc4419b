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

#include "tse/model.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "tse/error.hpp"

namespace tse {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* field) {
    require(v > 0, ErrorCode::kConfig, "must be positive, got " + std::to_string(v),
            std::string("model.") + field);
  };
  positive(enc_filters, "enc_filters");
  positive(win_len, "win_len");
  positive(hop, "hop");
  positive(bottleneck, "bottleneck");
  positive(conv_channels, "conv_channels");
  positive(kernel, "kernel");
  positive(blocks_per_repeat, "blocks_per_repeat");
  positive(repeats, "repeats");
  positive(embed_dim, "embed_dim");
  positive(enroll_repeats, "enroll_repeats");
  require(hop <= win_len, ErrorCode::kConfig, "hop must not exceed win_len",
          "model.hop");
  require(kernel % 2 == 1, ErrorCode::kConfig, "kernel must be odd",
          "model.kernel");
  require(embed_dim == bottleneck, ErrorCode::kConfig,
          "embed_dim must equal bottleneck for element-wise conditioning",
          "model.embed_dim");
  require(norm_eps > 0.0, ErrorCode::kConfig, "must be positive",
          "model.norm_eps");
}

std::size_t ModelConfig::padded_length(std::size_t samples) const {
  const auto win = static_cast<std::size_t>(win_len);
  const auto step = static_cast<std::size_t>(hop);
  if (samples <= win) return win;
  const std::size_t hops = (samples - win + step - 1) / step;
  return win + hops * step;
}

std::size_t ModelConfig::frames_for(std::size_t samples) const {
  return (padded_length(samples) - win_len) / hop + 1;
}

ModelConfig ModelConfig::full_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.enc_filters = 64;
  c.bottleneck = 64;
  c.embed_dim = 64;
  c.conv_channels = 128;
  c.blocks_per_repeat = 4;
  c.repeats = 2;
  return c;
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.enc_filters = 16;
  c.bottleneck = 8;
  c.embed_dim = 8;
  c.conv_channels = 16;
  c.blocks_per_repeat = 2;
  c.repeats = 1;
  return c;
}

std::string to_string(MaskActivation a) {
  switch (a) {
    case MaskActivation::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

std::string to_string(NormKind n) {
  switch (n) {
    case NormKind::kGlobalLayerNorm: return "gln";
  }
  return "unknown";
}

namespace param_keys {

std::string block(const std::string& net, int repeat, int block,
                  const std::string& leaf) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), ".r%d.b%02d.", repeat, block);
  return net + buf + leaf;
}

}  // namespace param_keys

namespace {

void add_front_end(std::vector<ParamShape>& out, const std::string& net,
                   const ModelConfig& c) {
  const int n = c.enc_filters, b = c.bottleneck;
  out.push_back({net + ".encoder.weight", n, c.win_len, ParamInit::kUniformFanIn, c.win_len});
  out.push_back({net + ".bottleneck.norm.gamma", n, 1, ParamInit::kOnes, 0});
  out.push_back({net + ".bottleneck.norm.beta", n, 1, ParamInit::kZeros, 0});
  out.push_back({net + ".bottleneck.conv.weight", b, n, ParamInit::kUniformFanIn, n});
  out.push_back({net + ".bottleneck.conv.bias", b, 1, ParamInit::kUniformFanIn, n});
}

void add_blocks(std::vector<ParamShape>& out, const std::string& net,
                const ModelConfig& c, int repeats) {
  const int b = c.bottleneck, h = c.conv_channels;
  for (int r = 0; r < repeats; ++r) {
    for (int x = 0; x < c.blocks_per_repeat; ++x) {
      auto key = [&](const char* leaf) { return param_keys::block(net, r, x, leaf); };
      out.push_back({key("conv1.weight"), h, b, ParamInit::kUniformFanIn, b});
      out.push_back({key("conv1.bias"), h, 1, ParamInit::kUniformFanIn, b});
      out.push_back({key("prelu1.slope"), 1, 1, ParamInit::kPreluSlope, 0});
      out.push_back({key("norm1.gamma"), h, 1, ParamInit::kOnes, 0});
      out.push_back({key("norm1.beta"), h, 1, ParamInit::kZeros, 0});
      out.push_back({key("dconv.weight"), h, c.kernel, ParamInit::kUniformFanIn, c.kernel});
      out.push_back({key("dconv.bias"), h, 1, ParamInit::kUniformFanIn, c.kernel});
      out.push_back({key("prelu2.slope"), 1, 1, ParamInit::kPreluSlope, 0});
      out.push_back({key("norm2.gamma"), h, 1, ParamInit::kOnes, 0});
      out.push_back({key("norm2.beta"), h, 1, ParamInit::kZeros, 0});
      out.push_back({key("conv2.weight"), b, h, ParamInit::kUniformFanIn, h});
      out.push_back({key("conv2.bias"), b, 1, ParamInit::kUniformFanIn, h});
    }
  }
}

void add_head(std::vector<ParamShape>& out, const ModelConfig& c) {
  const std::string net = param_keys::kExtractor;
  const int n = c.enc_filters, b = c.bottleneck;
  out.push_back({net + ".mask.prelu.slope", 1, 1, ParamInit::kPreluSlope, 0});
  out.push_back({net + ".mask.conv.weight", n, b, ParamInit::kUniformFanIn, b});
  out.push_back({net + ".mask.conv.bias", n, 1, ParamInit::kUniformFanIn, b});
  out.push_back({net + ".decoder.weight", c.win_len, n, ParamInit::kUniformFanIn, n});
}

std::int64_t elements(const std::vector<ParamShape>& shapes) {
  std::int64_t total = 0;
  for (const auto& s : shapes) total += static_cast<std::int64_t>(s.rows) * s.cols;
  return total;
}

}  // namespace

std::vector<ParamShape> extractor_layout(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamShape> out;
  add_front_end(out, param_keys::kExtractor, cfg);
  add_blocks(out, param_keys::kExtractor, cfg, cfg.repeats);
  add_head(out, cfg);
  return out;
}

std::vector<ParamShape> enroller_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::string net = param_keys::kEnroller;
  std::vector<ParamShape> out;
  add_front_end(out, net, cfg);
  add_blocks(out, net, cfg, cfg.enroll_repeats);
  out.push_back({net + ".proj.weight", cfg.embed_dim, cfg.bottleneck,
                 ParamInit::kUniformFanIn, cfg.bottleneck});
  out.push_back({net + ".proj.bias", cfg.embed_dim, 1, ParamInit::kUniformFanIn,
                 cfg.bottleneck});
  return out;
}

ParamCount count_params(const ModelConfig& cfg) {
  cfg.validate();
  ParamCount count;
  std::vector<ParamShape> part;
  add_front_end(part, param_keys::kExtractor, cfg);
  count.front_end = elements(part);
  part.clear();
  add_blocks(part, param_keys::kExtractor, cfg, cfg.repeats);
  count.blocks = elements(part);
  part.clear();
  add_head(part, cfg);
  count.head = elements(part);
  count.enrollment = elements(enroller_layout(cfg));
  return count;
}

template <typename S>
Mat<S>& ParamSet<S>::add(const std::string& key, Eigen::Index rows,
                         Eigen::Index cols) {
  auto [it, inserted] = tensors_.try_emplace(key, Mat<S>::Zero(rows, cols));
  require(inserted, ErrorCode::kInvalidArgument, "duplicate parameter key", key);
  return it->second;
}

template <typename S>
const Mat<S>& ParamSet<S>::at(const std::string& key) const {
  auto it = tensors_.find(key);
  if (it == tensors_.end()) fail(ErrorCode::kOutOfRange, "unknown parameter", key);
  return it->second;
}

template <typename S>
Mat<S>& ParamSet<S>::at(const std::string& key) {
  auto it = tensors_.find(key);
  if (it == tensors_.end()) fail(ErrorCode::kOutOfRange, "unknown parameter", key);
  return it->second;
}

template <typename S>
std::int64_t ParamSet<S>::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& [k, v] : tensors_) n += v.size();
  return n;
}

template <typename S>
std::vector<std::string> ParamSet<S>::keys() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [k, v] : tensors_) out.push_back(k);
  return out;
}

template <typename S>
ParamSet<S> ParamSet<S>::zeros_like() const {
  ParamSet out;
  for (const auto& [k, v] : tensors_) out.add(k, v.rows(), v.cols());
  return out;
}

template <typename S>
void ParamSet<S>::set_zero() {
  for (auto& [k, v] : tensors_) v.setZero();
}

template <typename S>
double ParamSet<S>::squared_norm() const {
  double total = 0.0;
  for (const auto& [k, v] : tensors_) total += v.template cast<double>().squaredNorm();
  return total;
}

template <typename S>
void ParamSet<S>::scale(S factor) {
  for (auto& [k, v] : tensors_) v *= factor;
}

template <typename S>
bool ParamSet<S>::all_finite() const {
  for (const auto& [k, v] : tensors_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

template class ParamSet<float>;
template class ParamSet<double>;

namespace {

template <typename S>
void initialise(ParamSet<S>& params, const std::vector<ParamShape>& layout,
                std::mt19937_64& rng) {
  for (const auto& shape : layout) {
    Mat<S>& m = params.add(shape.key, shape.rows, shape.cols);
    switch (shape.init) {
      case ParamInit::kUniformFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(shape.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(dist(rng));
        break;
      }
      case ParamInit::kOnes: m.setOnes(); break;
      case ParamInit::kZeros: m.setZero(); break;
      case ParamInit::kPreluSlope: m.setConstant(S(0.25)); break;
    }
  }
}

}  // namespace

template <typename S>
Model<S> init_model(const ModelConfig& cfg, const ClassVocabulary& vocab,
                    std::uint64_t seed) {
  cfg.validate();
  Model<S> model;
  model.config = cfg;
  model.vocabulary = vocab;
  std::mt19937_64 rng(seed);
  initialise(model.extractor, extractor_layout(cfg), rng);
  initialise(model.enroller, enroller_layout(cfg), rng);
  model.embeddings = EmbeddingMatrix<S>::random(cfg.embed_dim, vocab.size(), rng());
  return model;
}

template Model<float> init_model<float>(const ModelConfig&, const ClassVocabulary&,
                                        std::uint64_t);
template Model<double> init_model<double>(const ModelConfig&, const ClassVocabulary&,
                                          std::uint64_t);

}  // namespace tse
