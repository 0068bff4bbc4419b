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

#include <stdexcept>
#include <string>
#include <string_view>

namespace tse {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kOutOfRange,
  kIo,
  kFormat,
  kNumeric,
  kConfig,
};

std::string_view to_string(ErrorCode code);

// All failures in the library surface as tse::Error. `subject` names the
// offending item (a component index, a config field, a file path) when one
// exists so callers can build field-level diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string subject = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message,
                       std::string subject = {});

inline void require(bool condition, ErrorCode code, const std::string& message,
                    std::string subject = {}) {
  if (!condition) fail(code, message, std::move(subject));
}

}  // namespace tse
