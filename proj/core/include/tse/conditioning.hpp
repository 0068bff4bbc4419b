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

#include <functional>
#include <span>
#include <string>

#include "tse/model.hpp"
#include "tse/network.hpp"
#include "tse/waveform.hpp"

namespace tse {

// Enrollment embedding g(a) of one waveform; throws if it is shorter than
// one analysis window.
template <typename S>
Vec<S> encode_enrollment(const Model<S>& model, const Waveform& enrollment);

// Arithmetic mean of encoder(shot) over the shots; throws on an empty list.
template <typename S>
Vec<S> average_embeddings(std::span<const Waveform> shots,
                          const std::function<Vec<S>(const Waveform&)>& encoder);

template <typename S>
Vec<S> average_embeddings(const Model<S>& model, std::span<const Waveform> shots);

// The 1-hot column for a label in the (possibly augmented) vocabulary.
template <typename S>
Vec<S> class_embedding(const Model<S>& model, const std::string& label);

template <typename S>
std::vector<S> to_scalar(std::span<const double> samples);

}  // namespace tse
