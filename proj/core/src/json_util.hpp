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

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "tse/error.hpp"

namespace tse::jsonutil {

// Reads optional keys from a JSON object and rejects anything it was not
// asked about. Errors name the offending dotted key.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string prefix)
      : j_(j), prefix_(std::move(prefix)) {
    require(j_.is_object(), ErrorCode::kConfig, "expected a JSON object", prefix_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  void mark(const std::string& key) { seen_.insert(key); }
  std::string path(const std::string& key) const { return prefix_ + "." + key; }

  template <typename T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfig, std::string("wrong type: ") + e.what(), path(key));
    }
    return true;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorCode::kConfig, "unknown key", path(key));
    }
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

}  // namespace tse::jsonutil
