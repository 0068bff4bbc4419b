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
#include <map>
#include <string>
#include <vector>

#include "tse/embedding.hpp"
#include "tse/layers.hpp"
#include "tse/vocabulary.hpp"

namespace tse {

enum class MaskActivation { kSigmoid };
enum class NormKind { kGlobalLayerNorm };

// Network hyperparameters. Field names follow their roles; the usual
// Conv-TasNet letters are N=enc_filters, L=win_len, B=bottleneck,
// H=conv_channels, P=kernel, X=blocks_per_repeat, R=repeats.
struct ModelConfig {
  int enc_filters = 256;
  int win_len = 20;
  int hop = 10;
  int bottleneck = 256;
  int conv_channels = 512;
  int kernel = 3;
  int blocks_per_repeat = 8;
  int repeats = 4;
  int embed_dim = 256;
  int enroll_repeats = 1;
  MaskActivation mask_activation = MaskActivation::kSigmoid;
  NormKind norm_kind = NormKind::kGlobalLayerNorm;
  double norm_eps = 1e-8;

  // Throws kConfig naming the first offending field.
  void validate() const;

  // Zero-padded length so that (padded - win_len) is a multiple of hop.
  std::size_t padded_length(std::size_t samples) const;
  std::size_t frames_for(std::size_t samples) const;

  static ModelConfig full_scale();
  // enc_filters=64, B=D=64, H=128, X=4, R=2.
  static ModelConfig toy();
  // enc_filters=16, B=D=8, H=16, X=2, R=1.
  static ModelConfig micro();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string to_string(MaskActivation a);
std::string to_string(NormKind n);

struct ParamCount {
  std::int64_t front_end = 0;  // encoder + bottleneck
  std::int64_t blocks = 0;     // all dilated convolution blocks
  std::int64_t head = 0;       // mask estimator + decoder
  std::int64_t enrollment = 0;

  std::int64_t extraction() const { return front_end + blocks + head; }
  std::int64_t total(std::size_t num_classes, int embed_dim) const {
    return extraction() + enrollment +
           static_cast<std::int64_t>(num_classes) * embed_dim;
  }
};

// Validates cfg first.
ParamCount count_params(const ModelConfig& cfg);

// Named trainable arrays. Iteration order is the lexicographic key order,
// which is also the serialization order.
template <typename S>
class ParamSet {
 public:
  Mat<S>& add(const std::string& key, Eigen::Index rows, Eigen::Index cols);
  const Mat<S>& at(const std::string& key) const;
  Mat<S>& at(const std::string& key);
  bool contains(const std::string& key) const { return tensors_.count(key) > 0; }
  std::size_t size() const noexcept { return tensors_.size(); }
  std::int64_t scalar_count() const;
  std::vector<std::string> keys() const;

  const std::map<std::string, Mat<S>>& tensors() const noexcept { return tensors_; }
  std::map<std::string, Mat<S>>& tensors() noexcept { return tensors_; }

  ParamSet zeros_like() const;
  void set_zero();
  double squared_norm() const;
  void scale(S factor);
  bool all_finite() const;

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    for (const auto& [k, v] : tensors_) out.add(k, v.rows(), v.cols()) = v.template cast<T>();
    return out;
  }

 private:
  std::map<std::string, Mat<S>> tensors_;
};

// Full trainable state: extraction network, enrollment encoder, embedding
// matrix, and the vocabulary that indexes the matrix columns.
template <typename S>
struct Model {
  ModelConfig config;
  ClassVocabulary vocabulary;
  ParamSet<S> extractor;
  ParamSet<S> enroller;
  EmbeddingMatrix<S> embeddings;

  template <typename T>
  Model<T> cast() const {
    return Model<T>{config, vocabulary, extractor.template cast<T>(),
                    enroller.template cast<T>(), embeddings.template cast<T>()};
  }
};

template <typename S>
Model<S> init_model(const ModelConfig& cfg, const ClassVocabulary& vocab,
                    std::uint64_t seed);

// Parameter key helpers shared by the network and its tests.
namespace param_keys {
inline constexpr const char* kExtractor = "ext";
inline constexpr const char* kEnroller = "enr";
std::string block(const std::string& net, int repeat, int block,
                  const std::string& leaf);
}  // namespace param_keys

// The keys init_model creates for the extraction network / enrollment
// encoder, with shapes.
enum class ParamInit { kUniformFanIn, kOnes, kZeros, kPreluSlope };

struct ParamShape {
  std::string key;
  Eigen::Index rows;
  Eigen::Index cols;
  ParamInit init;
  int fan_in;
};
std::vector<ParamShape> extractor_layout(const ModelConfig& cfg);
std::vector<ParamShape> enroller_layout(const ModelConfig& cfg);

}  // namespace tse
