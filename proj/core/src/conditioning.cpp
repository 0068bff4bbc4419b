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

#include "tse/conditioning.hpp"

#include "tse/error.hpp"

namespace tse {

template <typename S>
std::vector<S> to_scalar(std::span<const double> samples) {
  return std::vector<S>(samples.begin(), samples.end());
}

template <typename S>
Vec<S> encode_enrollment(const Model<S>& model, const Waveform& enrollment) {
  require(enrollment.size() >= static_cast<std::size_t>(model.config.win_len),
          ErrorCode::kInvalidArgument,
          "enrollment shorter than one analysis window (" +
              std::to_string(enrollment.size()) + " samples)");
  EnrollmentEncoder<S> encoder(model.config, model.enroller);
  const auto x = to_scalar<S>(enrollment.samples());
  return encoder.encode(x);
}

template <typename S>
Vec<S> average_embeddings(std::span<const Waveform> shots,
                          const std::function<Vec<S>(const Waveform&)>& encoder) {
  require(!shots.empty(), ErrorCode::kInvalidArgument, "no enrollment shots");
  Vec<double> sum;
  for (const auto& shot : shots) {
    const Vec<S> e = encoder(shot);
    if (sum.size() == 0) sum = Vec<double>::Zero(e.size());
    require(e.size() == sum.size(), ErrorCode::kShapeMismatch,
            "embedding dimension differs between shots");
    sum += e.template cast<double>();
  }
  return (sum / static_cast<double>(shots.size())).template cast<S>();
}

template <typename S>
Vec<S> average_embeddings(const Model<S>& model, std::span<const Waveform> shots) {
  return average_embeddings<S>(
      shots, [&](const Waveform& w) { return encode_enrollment(model, w); });
}

template <typename S>
Vec<S> class_embedding(const Model<S>& model, const std::string& label) {
  return model.embeddings.column(model.vocabulary.index_of(label));
}

#define TSE_INSTANTIATE_CONDITIONING(S)                                          \
  template std::vector<S> to_scalar<S>(std::span<const double>);                 \
  template Vec<S> encode_enrollment<S>(const Model<S>&, const Waveform&);        \
  template Vec<S> average_embeddings<S>(                                         \
      std::span<const Waveform>, const std::function<Vec<S>(const Waveform&)>&); \
  template Vec<S> average_embeddings<S>(const Model<S>&, std::span<const Waveform>); \
  template Vec<S> class_embedding<S>(const Model<S>&, const std::string&);

TSE_INSTANTIATE_CONDITIONING(float)
TSE_INSTANTIATE_CONDITIONING(double)

}  // namespace tse
