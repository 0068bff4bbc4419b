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
#include <span>
#include <string>
#include <vector>

#include "tse/layers.hpp"
#include "tse/model.hpp"

namespace tse {

// Saved activations of one dilated convolution block, enough to run its
// backward pass.
template <typename S>
struct BlockTape {
  Mat<S> input;
  Mat<S> pre_act1;
  layers::NormCache<S> norm1;
  Mat<S> pre_act2;
  layers::NormCache<S> norm2;
};

// Learned analysis filterbank followed by normalisation and the bottleneck
// projection.
template <typename S>
struct FrontEndTape {
  std::size_t length = 0;  // unpadded input samples
  Mat<S> frames;           // win_len x frames
  Mat<S> encoded;          // enc_filters x frames
  layers::NormCache<S> norm;
  Mat<S> normed;
};

// Mask-based extraction network f(y, e). The first repeat of blocks forms the
// trunk, which does not depend on e; the conditioning product z * e and
// everything after it form the head. Splitting the two lets several
// embeddings share one trunk pass.
template <typename S>
class ExtractionNet {
 public:
  ExtractionNet(const ModelConfig& cfg, const ParamSet<S>& params);

  struct Trunk {
    FrontEndTape<S> front;
    std::vector<BlockTape<S>> blocks;
    Mat<S> z;  // bottleneck x frames
  };

  struct Head {
    Vec<S> embedding;
    Mat<S> conditioned;  // z * e, broadcast over frames
    std::vector<BlockTape<S>> blocks;
    Mat<S> features;     // residual stream entering the mask estimator
    Mat<S> mask;         // enc_filters x frames, in [0, 1]
    Mat<S> masked;       // mask * encoded
    std::vector<S> output;
  };

  // keep_tape=false drops per-block activations (inference only).
  void run_trunk(std::span<const S> mixture, Trunk& trunk, bool keep_tape) const;
  void run_head(const Trunk& trunk, const Vec<S>& embedding, Head& head,
                bool keep_tape) const;
  // Head computation from an explicit post-conditioning activation. With
  // conditioned = z this is the network with the product removed.
  void run_head_from(const Mat<S>& conditioned, const Mat<S>& encoded,
                     std::size_t length, Head& head, bool keep_tape) const;

  // Backpropagates d_output through the head. grads may be null when only
  // d_z / d_encoded / d_embedding are wanted. d_embedding may be null.
  void backward_head(const Trunk& trunk, const Head& head,
                     std::span<const S> d_output, ParamSet<S>* grads,
                     Mat<S>& d_z, Mat<S>& d_encoded, Vec<S>* d_embedding) const;
  void backward_trunk(const Trunk& trunk, const Mat<S>& d_z,
                      const Mat<S>& d_encoded, ParamSet<S>& grads) const;

  std::vector<S> extract(std::span<const S> mixture, const Vec<S>& embedding) const;

  const ModelConfig& config() const noexcept { return cfg_; }

 private:
  ModelConfig cfg_;
  const ParamSet<S>* params_;
};

// g(a): front end, enroll_repeats stacks of blocks, frame average, linear
// projection to embed_dim.
template <typename S>
class EnrollmentEncoder {
 public:
  EnrollmentEncoder(const ModelConfig& cfg, const ParamSet<S>& params);

  struct Tape {
    FrontEndTape<S> front;
    std::vector<BlockTape<S>> blocks;
    Vec<S> pooled;
  };

  Vec<S> encode(std::span<const S> enrollment, Tape* tape = nullptr) const;
  void backward(const Tape& tape, const Vec<S>& d_embedding,
                ParamSet<S>& grads) const;

 private:
  ModelConfig cfg_;
  const ParamSet<S>* params_;
};

// Number of EnrollmentEncoder::encode calls in this process.
std::uint64_t enrollment_encoder_calls();

template <typename S>
struct ForwardTrace {
  std::vector<S> output;
  Mat<S> encoded;
  Mat<S> z;
  Mat<S> conditioned;
  Mat<S> mask;
  Mat<S> masked;
};

template <typename S>
ForwardTrace<S> forward_traced(const ExtractionNet<S>& net,
                               std::span<const S> mixture,
                               const Vec<S>& embedding);

}  // namespace tse
