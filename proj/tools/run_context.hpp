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

#include <filesystem>
#include <memory>
#include <string>

#include <spdlog/logger.h>

#include "tse/config.hpp"

namespace tse::cli {

// Per-invocation state: the effective configuration and a run directory
// holding config.json, log.txt and every output of the command.
struct RunContext {
  RunConfig config;
  std::filesystem::path run_dir;
  std::shared_ptr<spdlog::logger> log;

  std::filesystem::path path(const std::string& name) const { return run_dir / name; }
};

// Creates <runs_dir>/<UTC timestamp>-<command> (or `explicit_dir` when
// given), writes the effective config and opens the log.
RunContext open_run(const RunConfig& config, const std::string& command,
                    const std::string& explicit_dir);

}  // namespace tse::cli
