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

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_context.hpp"
#include "tse/config.hpp"
#include "tse/error.hpp"
#include "tse/runtime.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  long long seed = -1;
  std::string run_dir;
};

// Defaults < config file < environment paths < --set < dedicated flags.
tse::RunConfig effective_config(const Globals& g, const std::vector<std::string>& flag_overrides) {
  tse::RunConfig cfg;
  cfg.apply_master_seed();
  if (!g.config_path.empty()) cfg = tse::load_run_config(g.config_path, cfg);
  tse::apply_path_environment(cfg);
  for (const auto& o : g.overrides) tse::apply_override(cfg, o);
  if (g.seed >= 0) tse::apply_override(cfg, "seed=" + std::to_string(g.seed));
  if (g.workers > 0) tse::apply_override(cfg, "workers=" + std::to_string(g.workers));
  for (const auto& o : flag_overrides) tse::apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  tse::tune_allocator();
  CLI::App app{"tse: class- and enrollment-conditioned target sound extraction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("-c,--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "override a config key, e.g. training.lr=1e-3")
      ->take_all();
  app.add_option("--workers", g.workers, "threads for data-parallel stages")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "master seed")->check(CLI::NonNegativeNumber);
  app.add_option("--run-dir", g.run_dir, "run directory (default runs/<UTC time>-<command>)");

  std::vector<std::string> flag_overrides;
  std::function<int(const tse::cli::RunContext&)> action;

  tse::cli::BankOptions bank;
  auto* c_bank = app.add_subcommand("bank", "render the synthetic event and noise banks to WAV");
  c_bank->add_option("--out", bank.out, "output directory");
  c_bank->callback([&] { action = [&](const auto& ctx) { return tse::cli::run_bank(ctx, bank); }; });

  tse::cli::SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "generate mixtures, stems and manifests");
  c_sim->add_option("--out", sim.out, "dataset directory (default paths.data_dir)");
  c_sim->add_option("--split", sim.splits, "train, dev, test, new_test (default: all)")
      ->check(CLI::IsMember({"train", "dev", "test", "new_test"}));
  c_sim->add_flag("--no-stems", sim.no_stems, "write only mixture, target and noise");
  c_sim->add_flag("--pcm16", sim.pcm16, "16-bit PCM instead of float32 WAVs");
  c_sim->callback([&] { action = [&](const auto& ctx) { return tse::cli::run_simulate(ctx, sim); }; });

  tse::cli::TrainOptionsCli tr;
  std::string mode;
  int epochs = 0;
  auto* c_train = app.add_subcommand("train", "train an extraction model");
  c_train->add_option("--mode", mode, "one_hot, enrollment, mixed or mixed_el")
      ->check(CLI::IsMember({"one_hot", "enrollment", "mixed", "mixed_el"}));
  c_train->add_option("--epochs", epochs, "maximum epochs")->check(CLI::PositiveNumber);
  c_train->add_option("--data", tr.data, "dataset written by simulate (default: regenerate)");
  c_train->add_option("--patience", tr.patience, "early-stop patience in epochs (0: off)");
  c_train->add_option("--out", tr.out, "checkpoint path");
  c_train->callback([&] {
    if (!mode.empty()) flag_overrides.push_back("training.mode=\"" + mode + "\"");
    if (epochs > 0) flag_overrides.push_back("training.max_epochs=" + std::to_string(epochs));
    action = [&](const auto& ctx) { return tse::cli::run_train(ctx, tr); };
  });

  tse::cli::ExtractOptions ex;
  auto* c_ext = app.add_subcommand("extract", "extract one target sound from a mixture WAV");
  c_ext->add_option("--checkpoint", ex.checkpoint)->required()->check(CLI::ExistingFile);
  c_ext->add_option("--mixture", ex.mixture)->required()->check(CLI::ExistingFile);
  auto* o_class = c_ext->add_option("--class", ex.class_label, "target class label");
  auto* o_enroll = c_ext->add_option("--enroll", ex.enroll, "enrollment WAVs, comma separated")
                       ->delimiter(',')
                       ->check(CLI::ExistingFile);
  o_class->excludes(o_enroll);
  c_ext->add_option("--out", ex.out, "output WAV");
  c_ext->callback([&] { action = [&](const auto& ctx) { return tse::cli::run_extract(ctx, ex); }; });

  tse::cli::AdaptOptions ad;
  std::string init;
  int adapt_epochs = 0;
  auto* c_adapt = app.add_subcommand("adapt", "register new classes from K enrollment clips");
  c_adapt->add_option("--checkpoint", ad.checkpoint)->required()->check(CLI::ExistingFile);
  c_adapt->add_option("--shots", ad.shots, "directory of <label>/*.wav (default: held-out shots)")
      ->check(CLI::ExistingDirectory);
  c_adapt->add_option("--init", init, "avg or random")->check(CLI::IsMember({"avg", "random"}));
  c_adapt->add_option("--epochs", adapt_epochs, "adaptation epochs (0: average only)")
      ->check(CLI::NonNegativeNumber);
  c_adapt->add_option("--out", ad.out, "adapted checkpoint path");
  c_adapt->callback([&] {
    if (!init.empty()) flag_overrides.push_back("adaptation.init=\"" + init + "\"");
    if (c_adapt->count("--epochs") > 0) {
      flag_overrides.push_back("adaptation.epochs=" + std::to_string(adapt_epochs));
    }
    action = [&](const auto& ctx) { return tse::cli::run_adapt(ctx, ad); };
  });

  tse::cli::EvaluateOptions ev;
  auto* c_eval = app.add_subcommand("evaluate", "score a checkpoint on a test split");
  c_eval->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--set", ev.test_set, "seen or new")->check(CLI::IsMember({"seen", "new"}));
  c_eval->add_option("--policy", ev.policy, "one_hot, enrollment, avg_k or adapted")
      ->check(CLI::IsMember({"one_hot", "enrollment", "avg_k", "adapted"}));
  c_eval->add_option("--k", ev.k, "shots averaged by avg_k")->check(CLI::PositiveNumber);
  c_eval->add_option("--data", ev.data, "dataset written by simulate (default: regenerate)");
  c_eval->add_option("--out", ev.out, "records JSONL path");
  c_eval->callback([&] { action = [&](const auto& ctx) { return tse::cli::run_evaluate(ctx, ev); }; });

  tse::cli::ReportOptionsCli rep;
  auto* c_rep = app.add_subcommand("report", "tables and per-class chart from records");
  c_rep->add_option("--records", rep.records, "records JSONL files")
      ->required()
      ->check(CLI::ExistingFile);
  c_rep->add_flag("--paper-ref", rep.reference_rows, "add published reference rows");
  c_rep->add_option("--out", rep.out, "output directory (default: run directory)");
  c_rep->callback([&] { action = [&](const auto& ctx) { return tse::cli::run_report(ctx, rep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  tse::RunConfig cfg;
  try {
    cfg = effective_config(g, flag_overrides);
  } catch (const tse::Error& e) {
    std::fprintf(stderr, "tse: invalid configuration: %s\n", e.what());
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  tse::cli::RunContext ctx;
  try {
    ctx = tse::cli::open_run(cfg, command, g.run_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tse: %s\n", e.what());
    return kExitRuntime;
  }
  try {
    return action(ctx);
  } catch (const tse::Error& e) {
    ctx.log->error("{}", e.what());
    ctx.log->error("see {}", ctx.path("log.txt").string());
    return e.code() == tse::ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    ctx.log->error("{}", e.what());
    ctx.log->error("see {}", ctx.path("log.txt").string());
    return kExitRuntime;
  }
}
