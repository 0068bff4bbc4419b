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

#include "run_context.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "tse/error.hpp"

namespace tse::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

}  // namespace

RunContext open_run(const RunConfig& config, const std::string& command,
                    const std::string& explicit_dir) {
  RunContext ctx;
  ctx.config = config;
  if (!explicit_dir.empty()) {
    ctx.run_dir = explicit_dir;
  } else {
    const fs::path base = fs::path(config.paths.runs_dir) / (utc_stamp() + "-" + command);
    ctx.run_dir = base;
    for (int i = 2; fs::exists(ctx.run_dir); ++i) {
      ctx.run_dir = base.string() + "-" + std::to_string(i);
    }
  }
  std::error_code ec;
  fs::create_directories(ctx.run_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create run directory: " + ec.message(),
          ctx.run_dir.string());
  {
    std::ofstream out(ctx.path("config.json"));
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write config.json",
            ctx.run_dir.string());
    out << run_config_to_json(config) << '\n';
  }
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(ctx.path("log.txt").string(),
                                                                   true);
  ctx.log = std::make_shared<spdlog::logger>(command, spdlog::sinks_init_list{console, file});
  ctx.log->set_pattern("[%Y-%m-%d %H:%M:%S] [%l] %v");
  ctx.log->flush_on(spdlog::level::info);
  ctx.log->info("run directory {}", ctx.run_dir.string());
  return ctx;
}

}  // namespace tse::cli
