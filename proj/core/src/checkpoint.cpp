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

#include "tse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "tse/error.hpp"
#include "tse/network.hpp"

namespace tse {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'S', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr const char* kEmbeddingTensor = "emb/W";

struct TensorEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::uint64_t offset = 0;  // bytes from the start of the data section
};

struct RawCheckpoint {
  json header;
  std::vector<TensorEntry> tensors;
  std::string data;
};

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open checkpoint", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RawCheckpoint parse_raw(const std::string& bytes, const std::string& where) {
  constexpr std::size_t prefix = sizeof(kMagic) + 4 + 8;
  require(bytes.size() >= prefix && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
          ErrorCode::kFormat, "not a checkpoint file", where);
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&header_len, bytes.data() + 12, 8);
  require(version == kCheckpointVersion, ErrorCode::kFormat,
          "unsupported checkpoint version " + std::to_string(version), where);
  require(bytes.size() >= prefix + header_len, ErrorCode::kFormat, "truncated header", where);
  RawCheckpoint raw;
  try {
    raw.header = json::parse(bytes.substr(prefix, header_len));
    for (const auto& t : raw.header.at("tensors")) {
      raw.tensors.push_back({t.at("name").get<std::string>(), t.at("rows").get<Eigen::Index>(),
                             t.at("cols").get<Eigen::Index>(),
                             t.at("offset").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad checkpoint header: ") + e.what(), where);
  }
  raw.data = bytes.substr(prefix + header_len);
  for (const auto& t : raw.tensors) {
    const std::uint64_t need = t.offset + static_cast<std::uint64_t>(t.rows * t.cols) * 4;
    require(need <= raw.data.size(), ErrorCode::kFormat, "truncated tensor data", t.name);
  }
  return raw;
}

Mat<float> tensor_from(const RawCheckpoint& raw, const TensorEntry& t) {
  Mat<float> m(t.rows, t.cols);
  std::memcpy(m.data(), raw.data.data() + t.offset, sizeof(float) * m.size());
  return m;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) {
  return detail::to_json_value(cfg).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    cfg = detail::model_config_from_json(json::parse(text), ModelConfig{}, "model");
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what(), "model");
  }
  cfg.validate();
  return cfg;
}

void save_checkpoint(const fs::path& path, const Model<float>& model,
                     const CheckpointMeta& meta) {
  require(static_cast<std::size_t>(model.embeddings.num_classes()) == model.vocabulary.size(),
          ErrorCode::kShapeMismatch, "embedding columns differ from vocabulary size");
  std::vector<std::pair<std::string, const Mat<float>*>> blocks;
  for (const auto& [k, v] : model.extractor.tensors()) blocks.emplace_back("ext/" + k, &v);
  for (const auto& [k, v] : model.enroller.tensors()) blocks.emplace_back("enr/" + k, &v);
  blocks.emplace_back(kEmbeddingTensor, &model.embeddings.values());

  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["model_config"] = detail::to_json_value(model.config);
  header["vocabulary"] = model.vocabulary.labels();
  std::vector<bool> flags = model.embeddings.trainable_flags();
  header["trainable_columns"] = flags;
  header["metadata"] = {{"mode", meta.mode},
                        {"epoch", meta.epoch},
                        {"dev_loss", meta.dev_loss},
                        {"seed", meta.seed},
                        {"notes", meta.notes}};
  header["tensors"] = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : blocks) {
    header["tensors"].push_back(
        {{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m->size()) * sizeof(float);
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write checkpoint", tmp.string());
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : blocks) {
      out.write(reinterpret_cast<const char*>(m->data()),
                static_cast<std::streamsize>(m->size() * sizeof(float)));
    }
    require(static_cast<bool>(out), ErrorCode::kIo, "write failed", tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const RawCheckpoint raw = parse_raw(read_all(path), path.string());
  Checkpoint ck;
  try {
    ck.model.config =
        detail::model_config_from_json(raw.header.at("model_config"), ModelConfig{}, "model");
    ck.model.config.validate();
    ck.model.vocabulary =
        ClassVocabulary(raw.header.at("vocabulary").get<std::vector<std::string>>());
    const json& m = raw.header.at("metadata");
    ck.meta.mode = m.at("mode").get<std::string>();
    ck.meta.epoch = m.at("epoch").get<int>();
    ck.meta.dev_loss = m.at("dev_loss").get<double>();
    ck.meta.seed = m.at("seed").get<std::uint64_t>();
    ck.meta.notes = m.at("notes").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad checkpoint header: ") + e.what(), path.string());
  }
  bool have_w = false;
  for (const auto& t : raw.tensors) {
    if (t.name == kEmbeddingTensor) {
      ck.model.embeddings = EmbeddingMatrix<float>(tensor_from(raw, t));
      have_w = true;
    } else if (t.name.rfind("ext/", 0) == 0) {
      ck.model.extractor.add(t.name.substr(4), t.rows, t.cols) = tensor_from(raw, t);
    } else if (t.name.rfind("enr/", 0) == 0) {
      ck.model.enroller.add(t.name.substr(4), t.rows, t.cols) = tensor_from(raw, t);
    } else {
      fail(ErrorCode::kFormat, "unknown tensor group", t.name);
    }
  }
  require(have_w, ErrorCode::kFormat, "missing embedding matrix", path.string());
  const auto flags = raw.header.at("trainable_columns").get<std::vector<bool>>();
  require(flags.size() == static_cast<std::size_t>(ck.model.embeddings.num_classes()) &&
              flags.size() == ck.model.vocabulary.size(),
          ErrorCode::kFormat, "vocabulary, flags and embedding columns disagree",
          path.string());
  for (std::size_t i = 0; i < flags.size(); ++i) ck.model.embeddings.set_trainable(i, flags[i]);
  // Constructing the networks checks every shape against the config.
  ExtractionNet<float> shape_check(ck.model.config, ck.model.extractor);
  EnrollmentEncoder<float> enroll_check(ck.model.config, ck.model.enroller);
  require(ck.model.embeddings.dim() == ck.model.config.embed_dim, ErrorCode::kShapeMismatch,
          "embedding dimension differs from model.embed_dim", path.string());
  return ck;
}

CheckpointDiff diff_checkpoints(const fs::path& before, const fs::path& after) {
  const RawCheckpoint a = parse_raw(read_all(before), before.string());
  const RawCheckpoint b = parse_raw(read_all(after), after.string());
  CheckpointDiff d;
  for (const auto& [key, value] : a.header.items()) {
    if (key == "tensors") continue;
    if (!b.header.contains(key) || b.header.at(key) != value) d.header_changes.push_back(key);
  }
  for (const auto& [key, value] : b.header.items()) {
    if (!a.header.contains(key)) d.header_changes.push_back(key);
  }
  d.header_identical = d.header_changes.empty() && a.header.at("tensors") == b.header.at("tensors");

  auto find = [](const RawCheckpoint& r, const std::string& name) -> const TensorEntry* {
    for (const auto& t : r.tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  };
  for (const auto& ta : a.tensors) {
    const TensorEntry* tb = find(b, ta.name);
    if (tb == nullptr) {
      d.missing_tensors.push_back(ta.name);
      continue;
    }
    const char* pa = a.data.data() + ta.offset;
    const char* pb = b.data.data() + tb->offset;
    if (ta.name == kEmbeddingTensor) {
      d.columns_before = static_cast<std::size_t>(ta.cols);
      d.columns_after = static_cast<std::size_t>(tb->cols);
      if (ta.rows != tb->rows) {
        d.changed_tensors.push_back(ta.name);
        continue;
      }
      const std::size_t col_bytes = static_cast<std::size_t>(ta.rows) * sizeof(float);
      for (Eigen::Index c = 0; c < std::min(ta.cols, tb->cols); ++c) {
        if (std::memcmp(pa + c * col_bytes, pb + c * col_bytes, col_bytes) != 0) {
          d.changed_columns.push_back(static_cast<std::size_t>(c));
        }
      }
      continue;
    }
    if (ta.rows != tb->rows || ta.cols != tb->cols ||
        std::memcmp(pa, pb, static_cast<std::size_t>(ta.rows * ta.cols) * sizeof(float)) != 0) {
      d.changed_tensors.push_back(ta.name);
    }
  }
  for (const auto& tb : b.tensors) {
    if (find(a, tb.name) == nullptr) d.missing_tensors.push_back(tb.name);
  }
  return d;
}

std::string format_diff(const CheckpointDiff& d) {
  std::ostringstream os;
  os << "header: " << (d.header_identical ? "identical" : "changed");
  for (const auto& k : d.header_changes) os << " " << k;
  os << "\nembedding columns: " << d.columns_before << " -> " << d.columns_after << "\n";
  os << "changed shared columns: " << d.changed_columns.size() << "\n";
  for (auto c : d.changed_columns) os << "  column " << c << "\n";
  os << "changed tensors: " << d.changed_tensors.size() << "\n";
  for (const auto& t : d.changed_tensors) os << "  " << t << "\n";
  for (const auto& t : d.missing_tensors) os << "  only in one file: " << t << "\n";
  return os.str();
}

}  // namespace tse
