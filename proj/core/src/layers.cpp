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

#include "tse/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tse/error.hpp"

namespace tse::layers {

template <typename S>
Mat<S> frame_signal(std::span<const S> signal, int win, int hop) {
  const auto n = static_cast<Eigen::Index>(signal.size());
  require(n >= win && (n - win) % hop == 0, ErrorCode::kShapeMismatch,
          "frame_signal: length " + std::to_string(n) +
              " is not a whole number of hops");
  const Eigen::Index frames = (n - win) / hop + 1;
  Mat<S> out(win, frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const S* src = signal.data() + f * hop;
    for (int k = 0; k < win; ++k) out(k, f) = src[k];
  }
  return out;
}

template <typename S>
void overlap_add(const Mat<S>& frames, int hop, std::span<S> out) {
  const Eigen::Index win = frames.rows();
  const Eigen::Index count = frames.cols();
  require(static_cast<Eigen::Index>(out.size()) == (count - 1) * hop + win,
          ErrorCode::kShapeMismatch, "overlap_add: output length");
  std::fill(out.begin(), out.end(), S(0));
  for (Eigen::Index f = 0; f < count; ++f) {
    S* dst = out.data() + f * hop;
    for (Eigen::Index k = 0; k < win; ++k) dst[k] += frames(k, f);
  }
}

template <typename S>
void gln_forward(const Mat<S>& x, const Vec<S>& gamma, const Vec<S>& beta,
                 S eps, Mat<S>& y, NormCache<S>* cache) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index frames = x.cols();
  // Two passes: the mean first, then squared deviations, so the variance
  // does not suffer cancellation when the mean dominates. Per-channel
  // partial sums keep the inner loops vectorisable.
  std::vector<double> acc(channels, 0.0);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const S* col = x.data() + t * channels;
    for (Eigen::Index c = 0; c < channels; ++c) acc[c] += static_cast<double>(col[c]);
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < channels; ++c) total += acc[c];
  const double count = static_cast<double>(x.size());
  const double mean = total / count;
  std::fill(acc.begin(), acc.end(), 0.0);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const S* col = x.data() + t * channels;
    for (Eigen::Index c = 0; c < channels; ++c) {
      const double d = static_cast<double>(col[c]) - mean;
      acc[c] += d * d;
    }
  }
  double total_sq = 0.0;
  for (Eigen::Index c = 0; c < channels; ++c) total_sq += acc[c];
  const double var = total_sq / count;
  const S inv_std = static_cast<S>(1.0 / std::sqrt(var + static_cast<double>(eps)));
  const S m = static_cast<S>(mean);

  y.resize(channels, frames);
  S* norm_out = nullptr;
  if (cache != nullptr) {
    cache->inv_std = inv_std;
    cache->normalized.resize(channels, frames);
    norm_out = cache->normalized.data();
  }
  const S* g = gamma.data();
  const S* b = beta.data();
  for (Eigen::Index t = 0; t < frames; ++t) {
    const S* col = x.data() + t * channels;
    S* out = y.data() + t * channels;
    if (norm_out != nullptr) {
      S* nrm = norm_out + t * channels;
      for (Eigen::Index c = 0; c < channels; ++c) {
        const S v = (col[c] - m) * inv_std;
        nrm[c] = v;
        out[c] = g[c] * v + b[c];
      }
    } else {
      for (Eigen::Index c = 0; c < channels; ++c) {
        out[c] = g[c] * ((col[c] - m) * inv_std) + b[c];
      }
    }
  }
}

namespace {

template <typename S>
void gln_backward_column(const S* __restrict d, const S* __restrict h,
                         const S* __restrict gamma, Eigen::Index channels,
                         S* __restrict dgamma, S* __restrict dbeta,
                         S* __restrict acc_g, S* __restrict acc_gx) {
  for (Eigen::Index c = 0; c < channels; ++c) {
    dgamma[c] += d[c] * h[c];
    dbeta[c] += d[c];
    const S gd = d[c] * gamma[c];
    acc_g[c] += gd;
    acc_gx[c] += gd * h[c];
  }
}

}  // namespace

template <typename S>
void gln_backward(const Mat<S>& dy, const Vec<S>& gamma,
                  const NormCache<S>& cache, Mat<S>& dx, Vec<S>& dgamma,
                  Vec<S>& dbeta) {
  const Eigen::Index channels = dy.rows();
  const Eigen::Index frames = dy.cols();
  const Mat<S>& xh = cache.normalized;
  std::vector<S> acc_g(channels, S(0)), acc_gx(channels, S(0));
  for (Eigen::Index t = 0; t < frames; ++t) {
    gln_backward_column(dy.data() + t * channels, xh.data() + t * channels,
                        gamma.data(), channels, dgamma.data(), dbeta.data(),
                        acc_g.data(), acc_gx.data());
  }
  double sum_g = 0.0, sum_gx = 0.0;
  for (Eigen::Index c = 0; c < channels; ++c) {
    sum_g += acc_g[c];
    sum_gx += acc_gx[c];
  }
  const double count = static_cast<double>(dy.size());
  const S mean_g = static_cast<S>(sum_g / count);
  const S mean_gx = static_cast<S>(sum_gx / count);
  const S inv_std = cache.inv_std;
  dx.resize(channels, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const S* __restrict d = dy.data() + t * channels;
    const S* __restrict h = xh.data() + t * channels;
    S* __restrict out = dx.data() + t * channels;
    for (Eigen::Index c = 0; c < channels; ++c) {
      out[c] = inv_std * (d[c] * gamma[c] - mean_g - h[c] * mean_gx);
    }
  }
}

template <typename S>
void prelu_forward(const Mat<S>& x, S slope, Mat<S>& y) {
  y.resize(x.rows(), x.cols());
  const S* src = x.data();
  S* dst = y.data();
  const Eigen::Index n = x.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const S v = src[i];
    dst[i] = std::max(v, S(0)) + slope * std::min(v, S(0));
  }
}

template <typename S>
void prelu_backward(const Mat<S>& x, S slope, Mat<S>& dy_to_dx, S& dslope) {
  const S* src = x.data();
  S* d = dy_to_dx.data();
  const Eigen::Index n = x.size();
  constexpr int kLanes = 16;
  S acc[kLanes] = {};
  Eigen::Index i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) {
      const S v = src[i + l];
      const S g = d[i + l];
      const S pos = static_cast<S>(v > S(0));
      acc[l] += g * std::min(v, S(0));
      d[i + l] = g * (slope + (S(1) - slope) * pos);
    }
  }
  S total = 0;
  for (; i < n; ++i) {
    const S v = src[i];
    const S g = d[i];
    total += g * std::min(v, S(0));
    d[i] = v > S(0) ? g : slope * g;
  }
  for (S v : acc) total += v;
  dslope += total;
}

namespace {

// Valid output range for tap offset `off`: t in [lo, hi) reads t + off.
inline void tap_range(Eigen::Index frames, Eigen::Index off, Eigen::Index& lo,
                      Eigen::Index& hi) {
  lo = off < 0 ? -off : 0;
  hi = off > 0 ? frames - off : frames;
  if (hi < lo) hi = lo;
}

}  // namespace

template <typename S>
void depthwise_forward(const Mat<S>& x, const Mat<S>& weight,
                       const Vec<S>& bias, int dilation, Mat<S>& y) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index frames = x.cols();
  const int kernel = static_cast<int>(weight.cols());
  const int centre = (kernel - 1) / 2;
  y.resize(channels, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    S* out = y.data() + t * channels;
    for (Eigen::Index c = 0; c < channels; ++c) out[c] = bias[c];
    for (int p = 0; p < kernel; ++p) {
      const Eigen::Index src_t = t + static_cast<Eigen::Index>(p - centre) * dilation;
      if (src_t < 0 || src_t >= frames) continue;
      const S* in = x.data() + src_t * channels;
      const S* w = weight.data() + p * channels;
      for (Eigen::Index c = 0; c < channels; ++c) out[c] += w[c] * in[c];
    }
  }
}

template <typename S>
void depthwise_backward(const Mat<S>& x, const Mat<S>& weight,
                        const Mat<S>& dy, int dilation, Mat<S>& dx,
                        Mat<S>& dweight, Vec<S>& dbias) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index frames = x.cols();
  const int kernel = static_cast<int>(weight.cols());
  const int centre = (kernel - 1) / 2;
  dx.setZero(channels, frames);
  S* db = dbias.data();
  for (Eigen::Index t = 0; t < frames; ++t) {
    const S* g = dy.data() + t * channels;
    for (Eigen::Index c = 0; c < channels; ++c) db[c] += g[c];
    for (int p = 0; p < kernel; ++p) {
      const Eigen::Index src_t = t + static_cast<Eigen::Index>(p - centre) * dilation;
      if (src_t < 0 || src_t >= frames) continue;
      const S* in = x.data() + src_t * channels;
      const S* w = weight.data() + p * channels;
      S* dw = dweight.data() + p * channels;
      S* out = dx.data() + src_t * channels;
      for (Eigen::Index c = 0; c < channels; ++c) {
        dw[c] += g[c] * in[c];
        out[c] += g[c] * w[c];
      }
    }
  }
}

template <typename S>
void sigmoid_inplace(Mat<S>& x) {
  x = (S(1) + (-x.array()).exp()).inverse();
}

#define TSE_INSTANTIATE_LAYERS(S)                                              \
  template Mat<S> frame_signal<S>(std::span<const S>, int, int);               \
  template void overlap_add<S>(const Mat<S>&, int, std::span<S>);              \
  template void gln_forward<S>(const Mat<S>&, const Vec<S>&, const Vec<S>&, S, \
                               Mat<S>&, NormCache<S>*);                        \
  template void gln_backward<S>(const Mat<S>&, const Vec<S>&,                  \
                                const NormCache<S>&, Mat<S>&, Vec<S>&,         \
                                Vec<S>&);                                      \
  template void prelu_forward<S>(const Mat<S>&, S, Mat<S>&);                   \
  template void prelu_backward<S>(const Mat<S>&, S, Mat<S>&, S&);              \
  template void depthwise_forward<S>(const Mat<S>&, const Mat<S>&,             \
                                     const Vec<S>&, int, Mat<S>&);             \
  template void depthwise_backward<S>(const Mat<S>&, const Mat<S>&,            \
                                      const Mat<S>&, int, Mat<S>&, Mat<S>&,    \
                                      Vec<S>&);                                \
  template void sigmoid_inplace<S>(Mat<S>&);

TSE_INSTANTIATE_LAYERS(float)
TSE_INSTANTIATE_LAYERS(double)

#undef TSE_INSTANTIATE_LAYERS

}  // namespace tse::layers
