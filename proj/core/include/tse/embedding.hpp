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
#include <filesystem>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tse/layers.hpp"
#include "tse/vocabulary.hpp"

namespace tse {

struct OneHotVector {
  std::size_t class_index = 0;
};

// D x num_classes matrix whose columns are the per-class conditioning
// vectors, with a trainable flag per column.
template <typename S>
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(Mat<S> values);

  // Entries uniform in [-1/sqrt(D), 1/sqrt(D)].
  static EmbeddingMatrix random(int dim, std::size_t num_classes,
                                std::uint64_t seed);

  Eigen::Index dim() const noexcept { return values_.rows(); }
  Eigen::Index num_classes() const noexcept { return values_.cols(); }

  const Mat<S>& values() const noexcept { return values_; }
  Mat<S>& mutable_values() noexcept { return values_; }
  Vec<S> column(std::size_t index) const;

  bool trainable(std::size_t index) const;
  void set_trainable(std::size_t index, bool value);
  void freeze_all();
  void unfreeze_all();
  const std::vector<bool>& trainable_flags() const noexcept { return trainable_; }

  template <typename T>
  EmbeddingMatrix<T> cast() const {
    EmbeddingMatrix<T> out(values_.template cast<T>());
    for (std::size_t i = 0; i < trainable_.size(); ++i) {
      out.set_trainable(i, trainable_[i]);
    }
    return out;
  }

 private:
  Mat<S> values_;
  std::vector<bool> trainable_;
};

// Column `o.class_index` of W, i.e. the product W o.
template <typename S>
Vec<S> encode_one_hot(const OneHotVector& o, const EmbeddingMatrix<S>& w);

template <typename S>
struct Registration {
  EmbeddingMatrix<S> matrix;
  ClassVocabulary vocabulary;
  std::size_t index = 0;
};

// Appends e_new as a new trainable column. Existing columns are copied
// bit-for-bit and, when freeze_existing is set, marked frozen.
template <typename S>
Registration<S> register_class(const EmbeddingMatrix<S>& w,
                               const ClassVocabulary& vocab,
                               const std::string& label,
                               const std::type_identity_t<Vec<S>>& e_new,
                               bool freeze_existing = true);

// Versioned binary block plus a `<path>.labels` text sidecar with one label
// per line in index order.
void export_embeddings(const std::filesystem::path& path,
                       const EmbeddingMatrix<float>& w,
                       const ClassVocabulary& vocab);
std::pair<EmbeddingMatrix<float>, ClassVocabulary> import_embeddings(
    const std::filesystem::path& path);

}  // namespace tse
