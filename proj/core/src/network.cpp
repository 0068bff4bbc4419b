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

#include "tse/network.hpp"

#include <atomic>

#include "tse/error.hpp"

namespace tse {

namespace {

std::atomic<std::uint64_t> g_enrollment_calls{0};

template <typename M>
struct BlockRefs {
  M* conv1_w;
  M* conv1_b;
  M* prelu1;
  M* norm1_g;
  M* norm1_b;
  M* dconv_w;
  M* dconv_b;
  M* prelu2;
  M* norm2_g;
  M* norm2_b;
  M* conv2_w;
  M* conv2_b;
};

template <typename PS>
auto block_refs(PS& params, const std::string& net, int r, int x) {
  using M = std::remove_reference_t<decltype(params.at(std::string()))>;
  auto get = [&](const char* leaf) { return &params.at(param_keys::block(net, r, x, leaf)); };
  return BlockRefs<M>{get("conv1.weight"), get("conv1.bias"), get("prelu1.slope"),
                      get("norm1.gamma"),  get("norm1.beta"), get("dconv.weight"),
                      get("dconv.bias"),   get("prelu2.slope"), get("norm2.gamma"),
                      get("norm2.beta"),   get("conv2.weight"), get("conv2.bias")};
}

template <typename S>
Mat<S> affine(const layers::NormCache<S>& cache, const Mat<S>& gamma,
              const Mat<S>& beta) {
  return (cache.normalized.array().colwise() * gamma.col(0).array()).colwise() +
         beta.col(0).array();
}

// x -> x + conv2(gln(prelu(dconv(gln(prelu(conv1(x)))))))
template <typename S>
void block_forward(const BlockRefs<const Mat<S>>& p, int dilation, S eps,
                   const Mat<S>& x, Mat<S>& out, BlockTape<S>* tape) {
  Mat<S> h1 = (*p.conv1_w) * x;
  h1.colwise() += p.conv1_b->col(0);
  Mat<S> a;
  layers::prelu_forward(h1, (*p.prelu1)(0, 0), a);
  Mat<S> n1;
  layers::gln_forward<S>(a, p.norm1_g->col(0), p.norm1_b->col(0), eps, n1,
                         tape ? &tape->norm1 : nullptr);
  Mat<S> h2;
  layers::depthwise_forward<S>(n1, *p.dconv_w, p.dconv_b->col(0), dilation, h2);
  layers::prelu_forward(h2, (*p.prelu2)(0, 0), a);
  Mat<S> n2;
  layers::gln_forward<S>(a, p.norm2_g->col(0), p.norm2_b->col(0), eps, n2,
                         tape ? &tape->norm2 : nullptr);
  if (tape != nullptr) {
    tape->input = x;
    tape->pre_act1 = std::move(h1);
    tape->pre_act2 = std::move(h2);
  }
  out = x;
  out.noalias() += (*p.conv2_w) * n2;
  out.colwise() += p.conv2_b->col(0);
}

// Overwrites dx with d(loss)/d(block input). g may be null.
template <typename S>
void block_backward(const BlockRefs<const Mat<S>>& p,
                    const BlockRefs<Mat<S>>* g, int dilation,
                    const BlockTape<S>& tape, const Mat<S>& dout, Mat<S>& dx) {
  Mat<S> n2 = affine(tape.norm2, *p.norm2_g, *p.norm2_b);
  if (g != nullptr) {
    g->conv2_w->noalias() += dout * n2.transpose();
    g->conv2_b->col(0) += dout.rowwise().sum();
  }
  Mat<S> d = p.conv2_w->transpose() * dout;
  Vec<S> dgamma = Vec<S>::Zero(d.rows()), dbeta = Vec<S>::Zero(d.rows());
  Mat<S> da;
  layers::gln_backward<S>(d, p.norm2_g->col(0), tape.norm2, da, dgamma, dbeta);
  S dslope = 0;
  layers::prelu_backward(tape.pre_act2, (*p.prelu2)(0, 0), da, dslope);
  if (g != nullptr) {
    g->norm2_g->col(0) += dgamma;
    g->norm2_b->col(0) += dbeta;
    (*g->prelu2)(0, 0) += dslope;
  }

  Mat<S> n1 = affine(tape.norm1, *p.norm1_g, *p.norm1_b);
  Mat<S> dw = Mat<S>::Zero(p.dconv_w->rows(), p.dconv_w->cols());
  Vec<S> db = Vec<S>::Zero(p.dconv_b->rows());
  layers::depthwise_backward<S>(n1, *p.dconv_w, da, dilation, d, dw, db);
  if (g != nullptr) {
    *g->dconv_w += dw;
    g->dconv_b->col(0) += db;
  }

  dgamma.setZero();
  dbeta.setZero();
  layers::gln_backward<S>(d, p.norm1_g->col(0), tape.norm1, da, dgamma, dbeta);
  dslope = 0;
  layers::prelu_backward(tape.pre_act1, (*p.prelu1)(0, 0), da, dslope);
  if (g != nullptr) {
    g->norm1_g->col(0) += dgamma;
    g->norm1_b->col(0) += dbeta;
    (*g->prelu1)(0, 0) += dslope;
    g->conv1_w->noalias() += da * tape.input.transpose();
    g->conv1_b->col(0) += da.rowwise().sum();
  }
  dx = dout;
  dx.noalias() += p.conv1_w->transpose() * da;
}

template <typename S>
void stack_forward(const ParamSet<S>& params, const std::string& net,
                   const ModelConfig& cfg, int repeat_begin, int repeat_end,
                   Mat<S>& x, std::vector<BlockTape<S>>* tapes) {
  if (tapes != nullptr) {
    tapes->assign(static_cast<std::size_t>((repeat_end - repeat_begin) *
                                           cfg.blocks_per_repeat), {});
  }
  const S eps = static_cast<S>(cfg.norm_eps);
  Mat<S> out;
  std::size_t t = 0;
  for (int r = repeat_begin; r < repeat_end; ++r) {
    for (int b = 0; b < cfg.blocks_per_repeat; ++b, ++t) {
      const auto p = block_refs(params, net, r, b);
      block_forward<S>(p, 1 << b, eps, x, out, tapes ? &(*tapes)[t] : nullptr);
      x.swap(out);
    }
  }
}

template <typename S>
void stack_backward(const ParamSet<S>& params, ParamSet<S>* grads,
                    const std::string& net, const ModelConfig& cfg,
                    int repeat_begin, int repeat_end,
                    const std::vector<BlockTape<S>>& tapes, Mat<S>& d) {
  Mat<S> dx;
  std::size_t t = tapes.size();
  for (int r = repeat_end - 1; r >= repeat_begin; --r) {
    for (int b = cfg.blocks_per_repeat - 1; b >= 0; --b) {
      --t;
      const auto p = block_refs(params, net, r, b);
      if (grads != nullptr) {
        const auto g = block_refs(*grads, net, r, b);
        block_backward<S>(p, &g, 1 << b, tapes[t], d, dx);
      } else {
        block_backward<S>(p, nullptr, 1 << b, tapes[t], d, dx);
      }
      d.swap(dx);
    }
  }
}

template <typename S>
std::vector<S> padded_copy(std::span<const S> input, std::size_t padded) {
  std::vector<S> out(padded, S(0));
  std::copy(input.begin(), input.end(), out.begin());
  return out;
}

template <typename S>
Mat<S> front_forward(const ParamSet<S>& params, const std::string& net,
                     const ModelConfig& cfg, std::span<const S> input,
                     FrontEndTape<S>& tape) {
  require(input.size() >= static_cast<std::size_t>(cfg.win_len),
          ErrorCode::kInvalidArgument,
          "input has " + std::to_string(input.size()) +
              " samples, fewer than one analysis window (" +
              std::to_string(cfg.win_len) + ")");
  tape.length = input.size();
  const auto padded = padded_copy(input, cfg.padded_length(input.size()));
  tape.frames = layers::frame_signal<S>(padded, cfg.win_len, cfg.hop);
  tape.encoded = params.at(net + ".encoder.weight") * tape.frames;
  layers::gln_forward<S>(tape.encoded, params.at(net + ".bottleneck.norm.gamma").col(0),
                         params.at(net + ".bottleneck.norm.beta").col(0),
                         static_cast<S>(cfg.norm_eps), tape.normed, &tape.norm);
  Mat<S> out = params.at(net + ".bottleneck.conv.weight") * tape.normed;
  out.colwise() += params.at(net + ".bottleneck.conv.bias").col(0);
  return out;
}

template <typename S>
void front_backward(const ParamSet<S>& params, ParamSet<S>& grads,
                    const std::string& net, const FrontEndTape<S>& tape,
                    const Mat<S>& d_out, const Mat<S>* d_encoded_extra) {
  grads.at(net + ".bottleneck.conv.weight").noalias() += d_out * tape.normed.transpose();
  grads.at(net + ".bottleneck.conv.bias").col(0) += d_out.rowwise().sum();
  Mat<S> d_normed = params.at(net + ".bottleneck.conv.weight").transpose() * d_out;
  Mat<S> d_encoded;
  Vec<S> dgamma = Vec<S>::Zero(d_normed.rows()), dbeta = Vec<S>::Zero(d_normed.rows());
  layers::gln_backward<S>(d_normed, params.at(net + ".bottleneck.norm.gamma").col(0),
                          tape.norm, d_encoded, dgamma, dbeta);
  grads.at(net + ".bottleneck.norm.gamma").col(0) += dgamma;
  grads.at(net + ".bottleneck.norm.beta").col(0) += dbeta;
  if (d_encoded_extra != nullptr) d_encoded += *d_encoded_extra;
  grads.at(net + ".encoder.weight").noalias() += d_encoded * tape.frames.transpose();
}

}  // namespace

template <typename S>
ExtractionNet<S>::ExtractionNet(const ModelConfig& cfg, const ParamSet<S>& params)
    : cfg_(cfg), params_(&params) {
  cfg_.validate();
  for (const auto& shape : extractor_layout(cfg_)) {
    const Mat<S>& m = params.at(shape.key);
    require(m.rows() == shape.rows && m.cols() == shape.cols,
            ErrorCode::kShapeMismatch, "parameter shape does not match config",
            shape.key);
  }
}

template <typename S>
void ExtractionNet<S>::run_trunk(std::span<const S> mixture, Trunk& trunk,
                                 bool keep_tape) const {
  const std::string net = param_keys::kExtractor;
  trunk.z = front_forward(*params_, net, cfg_, mixture, trunk.front);
  stack_forward(*params_, net, cfg_, 0, 1, trunk.z, keep_tape ? &trunk.blocks : nullptr);
  if (!keep_tape) trunk.blocks.clear();
}

template <typename S>
void ExtractionNet<S>::run_head(const Trunk& trunk, const Vec<S>& embedding,
                                Head& head, bool keep_tape) const {
  require(embedding.size() == cfg_.embed_dim, ErrorCode::kShapeMismatch,
          "embedding has dimension " + std::to_string(embedding.size()) +
              ", expected " + std::to_string(cfg_.embed_dim));
  Mat<S> conditioned = trunk.z.array().colwise() * embedding.array();
  run_head_from(conditioned, trunk.front.encoded, trunk.front.length, head, keep_tape);
  head.embedding = embedding;
}

template <typename S>
void ExtractionNet<S>::run_head_from(const Mat<S>& conditioned,
                                     const Mat<S>& encoded, std::size_t length,
                                     Head& head, bool keep_tape) const {
  const std::string net = param_keys::kExtractor;
  require(conditioned.rows() == cfg_.bottleneck && conditioned.cols() == encoded.cols(),
          ErrorCode::kShapeMismatch, "conditioned activation shape");
  head.embedding.resize(0);
  head.conditioned = conditioned;
  head.features = conditioned;
  stack_forward(*params_, net, cfg_, 1, cfg_.repeats, head.features,
                keep_tape ? &head.blocks : nullptr);
  if (!keep_tape) head.blocks.clear();

  Mat<S> act;
  layers::prelu_forward(head.features, params_->at(net + ".mask.prelu.slope")(0, 0), act);
  head.mask = params_->at(net + ".mask.conv.weight") * act;
  head.mask.colwise() += params_->at(net + ".mask.conv.bias").col(0);
  layers::sigmoid_inplace(head.mask);
  head.masked = head.mask.cwiseProduct(encoded);

  const Mat<S> out_frames = params_->at(net + ".decoder.weight") * head.masked;
  std::vector<S> padded(static_cast<std::size_t>((out_frames.cols() - 1) * cfg_.hop +
                                                 cfg_.win_len));
  layers::overlap_add<S>(out_frames, cfg_.hop, padded);
  padded.resize(length);
  head.output = std::move(padded);
}

template <typename S>
void ExtractionNet<S>::backward_head(const Trunk& trunk, const Head& head,
                                     std::span<const S> d_output,
                                     ParamSet<S>* grads, Mat<S>& d_z,
                                     Mat<S>& d_encoded, Vec<S>* d_embedding) const {
  const std::string net = param_keys::kExtractor;
  require(d_output.size() == head.output.size(), ErrorCode::kShapeMismatch,
          "output gradient length");
  const auto padded = padded_copy(d_output, cfg_.padded_length(d_output.size()));
  const Mat<S> d_frames = layers::frame_signal<S>(padded, cfg_.win_len, cfg_.hop);
  const Mat<S>& decoder = params_->at(net + ".decoder.weight");
  if (grads != nullptr) {
    grads->at(net + ".decoder.weight").noalias() += d_frames * head.masked.transpose();
  }
  const Mat<S> d_masked = decoder.transpose() * d_frames;
  d_encoded = d_masked.cwiseProduct(head.mask);
  // sigmoid'(u) = m (1 - m)
  Mat<S> d_pre = d_masked.array() * trunk.front.encoded.array() * head.mask.array() *
                 (S(1) - head.mask.array());

  const S slope = params_->at(net + ".mask.prelu.slope")(0, 0);
  const Mat<S>& mask_w = params_->at(net + ".mask.conv.weight");
  if (grads != nullptr) {
    Mat<S> act;
    layers::prelu_forward(head.features, slope, act);
    grads->at(net + ".mask.conv.weight").noalias() += d_pre * act.transpose();
    grads->at(net + ".mask.conv.bias").col(0) += d_pre.rowwise().sum();
  }
  Mat<S> d = mask_w.transpose() * d_pre;
  S dslope = 0;
  layers::prelu_backward(head.features, slope, d, dslope);
  if (grads != nullptr) grads->at(net + ".mask.prelu.slope")(0, 0) += dslope;

  require(head.blocks.size() ==
              static_cast<std::size_t>((cfg_.repeats - 1) * cfg_.blocks_per_repeat),
          ErrorCode::kInvalidArgument, "head was run without a tape");
  stack_backward(*params_, grads, net, cfg_, 1, cfg_.repeats, head.blocks, d);

  // d is now d(loss)/d(conditioned).
  if (d_embedding != nullptr) {
    *d_embedding = (d.array() * trunk.z.array()).rowwise().sum().matrix();
  }
  if (head.embedding.size() == d.rows()) {
    d_z = d.array().colwise() * head.embedding.array();
  } else {
    d_z = std::move(d);  // head ran via run_head_from without a product
  }
}

template <typename S>
void ExtractionNet<S>::backward_trunk(const Trunk& trunk, const Mat<S>& d_z,
                                      const Mat<S>& d_encoded,
                                      ParamSet<S>& grads) const {
  const std::string net = param_keys::kExtractor;
  require(trunk.blocks.size() == static_cast<std::size_t>(cfg_.blocks_per_repeat),
          ErrorCode::kInvalidArgument, "trunk was run without a tape");
  Mat<S> d = d_z;
  stack_backward(*params_, &grads, net, cfg_, 0, 1, trunk.blocks, d);
  front_backward(*params_, grads, net, trunk.front, d, &d_encoded);
}

template <typename S>
std::vector<S> ExtractionNet<S>::extract(std::span<const S> mixture,
                                         const Vec<S>& embedding) const {
  Trunk trunk;
  run_trunk(mixture, trunk, false);
  Head head;
  run_head(trunk, embedding, head, false);
  return std::move(head.output);
}

template <typename S>
EnrollmentEncoder<S>::EnrollmentEncoder(const ModelConfig& cfg,
                                        const ParamSet<S>& params)
    : cfg_(cfg), params_(&params) {
  cfg_.validate();
  for (const auto& shape : enroller_layout(cfg_)) {
    const Mat<S>& m = params.at(shape.key);
    require(m.rows() == shape.rows && m.cols() == shape.cols,
            ErrorCode::kShapeMismatch, "parameter shape does not match config",
            shape.key);
  }
}

template <typename S>
Vec<S> EnrollmentEncoder<S>::encode(std::span<const S> enrollment, Tape* tape) const {
  g_enrollment_calls.fetch_add(1, std::memory_order_relaxed);
  const std::string net = param_keys::kEnroller;
  Tape local;
  Tape& t = tape != nullptr ? *tape : local;
  Mat<S> x = front_forward(*params_, net, cfg_, enrollment, t.front);
  stack_forward(*params_, net, cfg_, 0, cfg_.enroll_repeats, x,
                tape != nullptr ? &t.blocks : nullptr);
  t.pooled = x.rowwise().mean();
  Vec<S> e = params_->at(net + ".proj.weight") * t.pooled;
  e += params_->at(net + ".proj.bias").col(0);
  return e;
}

template <typename S>
void EnrollmentEncoder<S>::backward(const Tape& tape, const Vec<S>& d_embedding,
                                    ParamSet<S>& grads) const {
  const std::string net = param_keys::kEnroller;
  grads.at(net + ".proj.weight").noalias() += d_embedding * tape.pooled.transpose();
  grads.at(net + ".proj.bias").col(0) += d_embedding;
  const Eigen::Index frames = tape.front.frames.cols();
  const Vec<S> d_pooled =
      params_->at(net + ".proj.weight").transpose() * d_embedding / static_cast<S>(frames);
  Mat<S> d = d_pooled.replicate(1, frames);
  stack_backward(*params_, &grads, net, cfg_, 0, cfg_.enroll_repeats, tape.blocks, d);
  front_backward<S>(*params_, grads, net, tape.front, d, nullptr);
}

std::uint64_t enrollment_encoder_calls() {
  return g_enrollment_calls.load(std::memory_order_relaxed);
}

template <typename S>
ForwardTrace<S> forward_traced(const ExtractionNet<S>& net,
                               std::span<const S> mixture,
                               const Vec<S>& embedding) {
  typename ExtractionNet<S>::Trunk trunk;
  net.run_trunk(mixture, trunk, false);
  typename ExtractionNet<S>::Head head;
  net.run_head(trunk, embedding, head, false);
  return ForwardTrace<S>{std::move(head.output), std::move(trunk.front.encoded),
                         std::move(trunk.z),     std::move(head.conditioned),
                         std::move(head.mask),   std::move(head.masked)};
}

template class ExtractionNet<float>;
template class ExtractionNet<double>;
template class EnrollmentEncoder<float>;
template class EnrollmentEncoder<double>;
template ForwardTrace<float> forward_traced<float>(const ExtractionNet<float>&,
                                                   std::span<const float>,
                                                   const Vec<float>&);
template ForwardTrace<double> forward_traced<double>(const ExtractionNet<double>&,
                                                     std::span<const double>,
                                                     const Vec<double>&);

}  // namespace tse
