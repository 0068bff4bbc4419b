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

#include <string>
#include <vector>

#include "run_context.hpp"

namespace tse::cli {

struct BankOptions {
  std::string out;  // defaults to <run_dir>/bank
};

struct SimulateOptions {
  std::string out;  // defaults to paths.data_dir
  std::vector<std::string> splits;
  bool no_stems = false;
  bool pcm16 = false;
};

struct TrainOptionsCli {
  std::string data;  // scenes are regenerated in memory when empty
  std::string out;   // defaults to <run_dir>/model.ckpt
  int patience = 0;
};

struct ExtractOptions {
  std::string checkpoint;
  std::string mixture;
  std::string class_label;
  std::vector<std::string> enroll;
  std::string out;  // defaults to <run_dir>/estimate.wav
};

struct AdaptOptions {
  std::string checkpoint;
  std::string shots;  // <dir>/<label>/*.wav; held-out shots when empty
  std::string out;    // defaults to <run_dir>/adapted.ckpt
};

struct EvaluateOptions {
  std::string checkpoint;
  std::string test_set = "seen";
  std::string policy = "one_hot";
  int k = 1;
  std::string data;
  std::string out;  // defaults to <run_dir>/records.jsonl
};

struct ReportOptionsCli {
  std::vector<std::string> records;
  bool reference_rows = false;
  std::string out;  // defaults to the run directory
};

int run_bank(const RunContext& ctx, const BankOptions& o);
int run_simulate(const RunContext& ctx, const SimulateOptions& o);
int run_train(const RunContext& ctx, const TrainOptionsCli& o);
int run_extract(const RunContext& ctx, const ExtractOptions& o);
int run_adapt(const RunContext& ctx, const AdaptOptions& o);
int run_evaluate(const RunContext& ctx, const EvaluateOptions& o);
int run_report(const RunContext& ctx, const ReportOptionsCli& o);

}  // namespace tse::cli
