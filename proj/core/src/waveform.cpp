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

#include "tse/waveform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "tse/error.hpp"

namespace tse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string subject)
    : std::runtime_error(subject.empty() ? message : subject + ": " + message),
      code_(code),
      subject_(std::move(subject)) {}

void fail(ErrorCode code, const std::string& message, std::string subject) {
  throw Error(code, message, std::move(subject));
}

Waveform::Waveform(std::vector<double> samples, int sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  require(sample_rate_hz_ > 0, ErrorCode::kInvalidArgument,
          "sample rate must be positive");
  require(!samples_.empty(), ErrorCode::kInvalidArgument,
          "waveform must contain at least one sample");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      fail(ErrorCode::kNumeric,
           "non-finite sample at index " + std::to_string(i));
    }
  }
}

Waveform Waveform::zeros(std::size_t length, int sample_rate_hz) {
  return Waveform(std::vector<double>(length, 0.0), sample_rate_hz);
}

double Waveform::energy() const noexcept {
  return std::inner_product(samples_.begin(), samples_.end(), samples_.begin(),
                            0.0);
}

double Waveform::power() const noexcept {
  return samples_.empty() ? 0.0 : energy() / samples_.size();
}

Waveform Waveform::scaled(double gain) const {
  std::vector<double> out(samples_);
  for (double& s : out) s *= gain;
  return Waveform(std::move(out), sample_rate_hz_);
}

Waveform Waveform::slice(std::size_t start, std::size_t length) const {
  require(start + length <= samples_.size() && length > 0,
          ErrorCode::kOutOfRange,
          "slice [" + std::to_string(start) + ", " +
              std::to_string(start + length) + ") outside waveform of length " +
              std::to_string(samples_.size()));
  return Waveform(std::vector<double>(samples_.begin() + start,
                                      samples_.begin() + start + length),
                  sample_rate_hz_);
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, int expected_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open for reading", path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kFormat, "not a RIFF/WAVE file", where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t chunk_size = get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > buf.size()) {
      fail(ErrorCode::kFormat, "truncated chunk", where);
    }
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) fail(ErrorCode::kFormat, "short fmt chunk", where);
      format = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (format == 0xFFFE && chunk_size >= 26) {
        format = get<std::uint16_t>(buf, body + 24);  // extensible sub-format
      }
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data = buf.data() + body;
      data_bytes = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (rate == 0) fail(ErrorCode::kFormat, "missing fmt chunk", where);
  if (data == nullptr) fail(ErrorCode::kFormat, "missing data chunk", where);
  if (channels != 1) {
    fail(ErrorCode::kFormat,
         "expected mono, got " + std::to_string(channels) + " channels", where);
  }
  if (expected_rate_hz > 0 && static_cast<int>(rate) != expected_rate_hz) {
    fail(ErrorCode::kFormat,
         "sample rate " + std::to_string(rate) + " Hz, expected " +
             std::to_string(expected_rate_hz),
         where);
  }

  std::vector<double> samples;
  if (format == 1 && bits == 16) {
    samples.resize(data_bytes / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::int16_t v;
      std::memcpy(&v, data + 2 * i, 2);
      samples[i] = v / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    samples.resize(data_bytes / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      float v;
      std::memcpy(&v, data + 4 * i, 4);
      samples[i] = v;
    }
  } else {
    fail(ErrorCode::kFormat,
         "unsupported encoding (format " + std::to_string(format) + ", " +
             std::to_string(bits) + " bits)",
         where);
  }
  return Waveform(std::move(samples), static_cast<int>(rate));
}

void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavEncoding encoding) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing", path.string());

  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block_align = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(wave.size() * block_align);
  const auto rate = static_cast<std::uint32_t>(wave.sample_rate());

  out.write("RIFF", 4);
  put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, pcm ? 1 : 3);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * block_align);
  put<std::uint16_t>(out, block_align);
  put<std::uint16_t>(out, bits);
  out.write("data", 4);
  put<std::uint32_t>(out, data_bytes);
  for (double s : wave.samples()) {
    if (pcm) {
      const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(clipped * 32768.0)));
    } else {
      put<float>(out, static_cast<float>(s));
    }
  }
  if (!out) fail(ErrorCode::kIo, "write failed", path.string());
}

}  // namespace tse
