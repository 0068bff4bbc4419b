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

#include "tse/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "tse/error.hpp"

namespace tse {

ClassVocabulary::ClassVocabulary(std::vector<std::string> labels) {
  for (auto& label : labels) append(label);
}

const std::string& ClassVocabulary::label(std::size_t index) const {
  require(index < labels_.size(), ErrorCode::kOutOfRange,
          "class index " + std::to_string(index) + " outside vocabulary of " +
              std::to_string(labels_.size()));
  return labels_[index];
}

bool ClassVocabulary::contains(std::string_view label) const {
  return index_.count(std::string(label)) > 0;
}

std::optional<std::size_t> ClassVocabulary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ClassVocabulary::index_of(std::string_view label) const {
  auto found = find(label);
  if (!found) fail(ErrorCode::kOutOfRange, "unknown class label", std::string(label));
  return *found;
}

std::size_t ClassVocabulary::append(const std::string& label) {
  require(!label.empty(), ErrorCode::kInvalidArgument, "empty class label");
  require(!contains(label), ErrorCode::kInvalidArgument,
          "label already in vocabulary", label);
  index_.emplace(label, labels_.size());
  labels_.push_back(label);
  return labels_.size() - 1;
}

template <typename S>
EmbeddingMatrix<S>::EmbeddingMatrix(Mat<S> values)
    : values_(std::move(values)),
      trainable_(static_cast<std::size_t>(values_.cols()), true) {
  require(values_.allFinite(), ErrorCode::kNumeric,
          "embedding matrix has non-finite entries");
}

template <typename S>
EmbeddingMatrix<S> EmbeddingMatrix<S>::random(int dim, std::size_t num_classes,
                                              std::uint64_t seed) {
  require(dim > 0, ErrorCode::kInvalidArgument, "embedding dim must be positive");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat<S> values(dim, static_cast<Eigen::Index>(num_classes));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values.data()[i] = static_cast<S>(dist(rng));
  }
  return EmbeddingMatrix(std::move(values));
}

template <typename S>
Vec<S> EmbeddingMatrix<S>::column(std::size_t index) const {
  require(index < static_cast<std::size_t>(values_.cols()), ErrorCode::kOutOfRange,
          "embedding column " + std::to_string(index) + " out of range");
  return values_.col(static_cast<Eigen::Index>(index));
}

template <typename S>
bool EmbeddingMatrix<S>::trainable(std::size_t index) const {
  require(index < trainable_.size(), ErrorCode::kOutOfRange,
          "embedding column out of range");
  return trainable_[index];
}

template <typename S>
void EmbeddingMatrix<S>::set_trainable(std::size_t index, bool value) {
  require(index < trainable_.size(), ErrorCode::kOutOfRange,
          "embedding column out of range");
  trainable_[index] = value;
}

template <typename S>
void EmbeddingMatrix<S>::freeze_all() {
  std::fill(trainable_.begin(), trainable_.end(), false);
}

template <typename S>
void EmbeddingMatrix<S>::unfreeze_all() {
  std::fill(trainable_.begin(), trainable_.end(), true);
}

template <typename S>
Vec<S> encode_one_hot(const OneHotVector& o, const EmbeddingMatrix<S>& w) {
  require(o.class_index < static_cast<std::size_t>(w.num_classes()),
          ErrorCode::kOutOfRange,
          "one-hot index " + std::to_string(o.class_index) + " >= " +
              std::to_string(w.num_classes()) + " classes");
  return w.column(o.class_index);
}

template <typename S>
Registration<S> register_class(const EmbeddingMatrix<S>& w,
                               const ClassVocabulary& vocab,
                               const std::string& label,
                               const std::type_identity_t<Vec<S>>& e_new,
                               bool freeze_existing) {
  require(static_cast<std::size_t>(w.num_classes()) == vocab.size(),
          ErrorCode::kShapeMismatch, "embedding matrix and vocabulary disagree");
  require(!vocab.contains(label), ErrorCode::kInvalidArgument,
          "label already registered", label);
  require(e_new.size() == w.dim(), ErrorCode::kShapeMismatch,
          "new embedding has dimension " + std::to_string(e_new.size()) +
              ", expected " + std::to_string(w.dim()));
  Mat<S> values(w.dim(), w.num_classes() + 1);
  values.leftCols(w.num_classes()) = w.values();
  values.col(w.num_classes()) = e_new;
  Registration<S> out{EmbeddingMatrix<S>(std::move(values)), vocab, 0};
  for (std::size_t i = 0; i < static_cast<std::size_t>(w.num_classes()); ++i) {
    out.matrix.set_trainable(i, freeze_existing ? false : w.trainable(i));
  }
  out.index = out.vocabulary.append(label);
  return out;
}

template class EmbeddingMatrix<float>;
template class EmbeddingMatrix<double>;
template Vec<float> encode_one_hot<float>(const OneHotVector&, const EmbeddingMatrix<float>&);
template Vec<double> encode_one_hot<double>(const OneHotVector&, const EmbeddingMatrix<double>&);
template Registration<float> register_class<float>(const EmbeddingMatrix<float>&,
                                                   const ClassVocabulary&,
                                                   const std::string&,
                                                   const Vec<float>&, bool);
template Registration<double> register_class<double>(const EmbeddingMatrix<double>&,
                                                     const ClassVocabulary&,
                                                     const std::string&,
                                                     const Vec<double>&, bool);

namespace {

constexpr char kEmbeddingMagic[8] = {'T', 'S', 'E', 'E', 'M', 'B', '\0', '\0'};
constexpr std::uint32_t kEmbeddingVersion = 1;

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".labels");
}

}  // namespace

void export_embeddings(const std::filesystem::path& path,
                       const EmbeddingMatrix<float>& w,
                       const ClassVocabulary& vocab) {
  require(static_cast<std::size_t>(w.num_classes()) == vocab.size(),
          ErrorCode::kShapeMismatch, "embedding matrix and vocabulary disagree");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing", path.string());
  const auto dim = static_cast<std::uint32_t>(w.dim());
  const auto cols = static_cast<std::uint32_t>(w.num_classes());
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  out.write(reinterpret_cast<const char*>(&kEmbeddingVersion), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (std::uint32_t c = 0; c < cols; ++c) {
    const char flag = w.trainable(c) ? 1 : 0;
    out.write(&flag, 1);
  }
  out.write(reinterpret_cast<const char*>(w.values().data()),
            static_cast<std::streamsize>(sizeof(float) * dim * cols));
  if (!out) fail(ErrorCode::kIo, "write failed", path.string());

  std::ofstream labels(sidecar(path));
  for (const auto& label : vocab.labels()) labels << label << '\n';
  if (!labels) fail(ErrorCode::kIo, "write failed", sidecar(path).string());
}

std::pair<EmbeddingMatrix<float>, ClassVocabulary> import_embeddings(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open for reading", path.string());
  char magic[8];
  std::uint32_t version = 0, dim = 0, cols = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, kEmbeddingMagic, 8) != 0) {
    fail(ErrorCode::kFormat, "not an embedding block", path.string());
  }
  require(version == kEmbeddingVersion, ErrorCode::kFormat,
          "unsupported embedding block version " + std::to_string(version),
          path.string());
  std::vector<char> flags(cols);
  in.read(flags.data(), cols);
  Mat<float> values(dim, cols);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(sizeof(float) * dim * cols));
  if (!in) fail(ErrorCode::kFormat, "truncated embedding block", path.string());

  std::ifstream labels_in(sidecar(path));
  if (!labels_in) fail(ErrorCode::kIo, "missing label sidecar", sidecar(path).string());
  std::vector<std::string> labels;
  for (std::string line; std::getline(labels_in, line);) {
    if (!line.empty()) labels.push_back(line);
  }
  require(labels.size() == cols, ErrorCode::kFormat,
          "label sidecar lists " + std::to_string(labels.size()) +
              " labels for " + std::to_string(cols) + " columns",
          sidecar(path).string());
  EmbeddingMatrix<float> w(std::move(values));
  for (std::uint32_t c = 0; c < cols; ++c) w.set_trainable(c, flags[c] != 0);
  return {std::move(w), ClassVocabulary(std::move(labels))};
}

}  // namespace tse
