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

#include <Eigen/Core>
#include <span>
#include <vector>

namespace tse {

// Activations are channels x frames, column-major: one column per frame.
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

namespace layers {

// win x frames matrix whose column f is signal[f*hop, f*hop + win).
// signal.size() must equal (frames - 1) * hop + win.
template <typename S>
Mat<S> frame_signal(std::span<const S> signal, int win, int hop);

// Inverse of frame_signal's layout: sums overlapping columns into out.
template <typename S>
void overlap_add(const Mat<S>& frames, int hop, std::span<S> out);

template <typename S>
struct NormCache {
  Mat<S> normalized;
  S inv_std = S(1);
};

// Global layer norm: statistics over all channels and frames, affine per
// channel.
template <typename S>
void gln_forward(const Mat<S>& x, const Vec<S>& gamma, const Vec<S>& beta,
                 S eps, Mat<S>& y, NormCache<S>* cache);

// dgamma/dbeta are accumulated, dx is overwritten.
template <typename S>
void gln_backward(const Mat<S>& dy, const Vec<S>& gamma,
                  const NormCache<S>& cache, Mat<S>& dx, Vec<S>& dgamma,
                  Vec<S>& dbeta);

template <typename S>
void prelu_forward(const Mat<S>& x, S slope, Mat<S>& y);

// Overwrites dx in place of dy (dx may alias dy); accumulates dslope.
template <typename S>
void prelu_backward(const Mat<S>& x, S slope, Mat<S>& dy_to_dx, S& dslope);

// Per-channel dilated convolution with "same" zero padding. weight is
// channels x kernel (odd kernel), bias is per channel.
template <typename S>
void depthwise_forward(const Mat<S>& x, const Mat<S>& weight,
                       const Vec<S>& bias, int dilation, Mat<S>& y);

// dx is overwritten; dweight/dbias are accumulated.
template <typename S>
void depthwise_backward(const Mat<S>& x, const Mat<S>& weight,
                        const Mat<S>& dy, int dilation, Mat<S>& dx,
                        Mat<S>& dweight, Vec<S>& dbias);

template <typename S>
void sigmoid_inplace(Mat<S>& x);

}  // namespace layers
}  // namespace tse
