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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "tse/adaptation.hpp"
#include "tse/checkpoint.hpp"
#include "tse/conditioning.hpp"
#include "tse/error.hpp"
#include "tse/evaluation.hpp"
#include "tse/experiment.hpp"
#include "tse/network.hpp"
#include "tse/rng.hpp"
#include "tse/training.hpp"

namespace tse::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string pick(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback.string() : value;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing", path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed", path.string());
}

void write_bank(const EventBank& bank, const fs::path& dir) {
  for (const auto& clip : bank.clips()) {
    std::string name = clip.source_id;
    std::replace(name.begin(), name.end(), '/', '_');
    const fs::path path = dir / clip.class_label / (name + ".wav");
    fs::create_directories(path.parent_path());
    write_wav(path, clip.waveform);
  }
}

// Scenes of one split: read back from a simulated dataset when `data` is
// set, regenerated from the configuration otherwise.
std::vector<RenderedScene> scenes_for(const RunContext& ctx, const Experiment& ex,
                                      const std::string& split, const std::string& data) {
  if (data.empty()) {
    ctx.log->info("generating {} scenes for split {}", split_size(ctx.config, split), split);
    return make_split(ex, ctx.config, split);
  }
  const fs::path dir = fs::path(data) / split;
  const auto manifests = read_manifest(dir / "manifest.jsonl");
  std::vector<RenderedScene> scenes;
  scenes.reserve(manifests.size());
  for (const auto& m : manifests) scenes.push_back(load_scene(m, dir));
  ctx.log->info("loaded {} scenes from {}", scenes.size(), dir.string());
  return scenes;
}

std::vector<NewClassShots> load_shots(const fs::path& dir, int rate) {
  const EventBank bank = load_event_bank_dir(dir, rate);
  std::vector<NewClassShots> out;
  for (const auto& label : bank.labels()) {
    NewClassShots s{label, {}};
    for (const EventClip* c : bank.clips_of(label)) s.shots.push_back(*c);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Waveform> read_waves(const std::vector<std::string>& paths, int rate) {
  std::vector<Waveform> out;
  for (const auto& p : paths) out.push_back(read_wav(p, rate));
  return out;
}

void log_summary(const RunContext& ctx, const std::vector<EvalRecord>& records) {
  for (const auto& row : summarize(records, {"test_set", "embedding_source", "k"})) {
    ctx.log->info("{} / {} / k={}: SDRi {:.2f} dB (sd {:.2f}, n={})", row.key.at("test_set"),
                  row.key.at("embedding_source"), row.key.at("k"), row.mean, row.stddev,
                  row.count);
  }
}

}  // namespace

int run_bank(const RunContext& ctx, const BankOptions& o) {
  const fs::path out = pick(o.out, ctx.path("bank"));
  const EventBank events = build_event_bank(ctx.config.bank);
  const EventBank noise = build_noise_bank(ctx.config.bank);
  write_bank(events, out / "events");
  write_bank(noise, out / "noise");
  write_text(out / "bank_spec.json", bank_spec_to_json(ctx.config.bank) + "\n");
  ctx.log->info("wrote {} event clips over {} classes and {} noise clips to {}", events.size(),
                events.labels().size(), noise.size(), out.string());
  return 0;
}

int run_simulate(const RunContext& ctx, const SimulateOptions& o) {
  const fs::path out = pick(o.out, ctx.config.paths.data_dir);
  const Experiment ex = prepare_experiment(ctx.config);
  std::vector<std::string> splits = o.splits;
  if (splits.empty()) {
    splits = {"train", "dev", "test"};
    if (!ex.held_out.empty()) splits.push_back("new_test");
  }
  DatasetWriteOptions w;
  w.write_all_stems = !o.no_stems;
  w.encoding = o.pcm16 ? WavEncoding::kPcm16 : WavEncoding::kFloat32;
  w.workers = ctx.config.workers;
  for (const auto& split : splits) {
    const auto scenes = make_split(ex, ctx.config, split);
    const fs::path dir = out / split;
    fs::create_directories(dir);
    std::vector<SceneManifest> manifests;
    for (const auto& s : scenes) {
      write_scene(s, dir, w);
      manifests.push_back(s.manifest);
    }
    write_manifest(dir / "manifest.jsonl", manifests);
    ctx.log->info("split {}: {} scenes in {}", split, scenes.size(), dir.string());
  }
  write_text(out / "config.json", run_config_to_json(ctx.config) + "\n");
  return 0;
}

int run_train(const RunContext& ctx, const TrainOptionsCli& o) {
  const RunConfig& cfg = ctx.config;
  const Experiment ex = prepare_experiment(cfg);
  const auto train_scenes = scenes_for(ctx, ex, "train", o.data);
  const auto dev_scenes = scenes_for(ctx, ex, "dev", o.data);
  Model<float> model =
      init_model<float>(cfg.model, ClassVocabulary(ex.seen), derive_seed(cfg.training.seed, {fnv1a("init")}));
  TrainOptions opts;
  opts.trace_path = ctx.path("trace.jsonl");
  opts.checkpoint_path = pick(o.out, ctx.path("model.ckpt"));
  opts.patience = o.patience;
  opts.on_epoch = [&](const EpochRecord& r) {
    ctx.log->info("epoch {}: train {:.3f} dev {:.3f} (enrl {:.3f}, 1-hot {:.3f}, emb {:.4f})"
                  " grad {:.2f} clipped {}/{} {:.0f}s",
                  r.epoch, r.train.total, r.dev.total, r.dev.l_ext_enrl, r.dev.l_ext_onehot,
                  r.dev.l_emb, r.mean_grad_norm, r.clipped_steps, r.steps, r.seconds);
  };
  ctx.log->info("training {} on {} scenes, {} classes", to_string(cfg.training.mode),
                train_scenes.size(), ex.seen.size());
  const TrainResult res = train(std::move(model), train_scenes, dev_scenes, ex.train_bank,
                                cfg.training, opts);
  ctx.log->info("best epoch {} dev loss {:.3f}; checkpoint {}", res.best_epoch,
                res.best_dev_loss, opts.checkpoint_path.string());
  return 0;
}

int run_extract(const RunContext& ctx, const ExtractOptions& o) {
  require(o.class_label.empty() != o.enroll.empty(), ErrorCode::kConfig,
          "give exactly one of --class or --enroll", "extract");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const int rate = ctx.config.scene.sample_rate_hz;
  const Waveform mixture = read_wav(o.mixture, rate);
  Vec<float> e;
  if (!o.class_label.empty()) {
    e = class_embedding(ck.model, o.class_label);
    ctx.log->info("conditioning on class column {}", o.class_label);
  } else {
    const auto shots = read_waves(o.enroll, rate);
    e = average_embeddings(ck.model, std::span<const Waveform>(shots));
    ctx.log->info("conditioning on the mean of {} enrollment embeddings", shots.size());
  }
  const ExtractionNet<float> net(ck.model.config, ck.model.extractor);
  const auto y = to_scalar<float>(mixture.samples());
  const auto est = net.extract(y, e);
  const fs::path out = pick(o.out, ctx.path("estimate.wav"));
  write_wav(out, Waveform(std::vector<double>(est.begin(), est.end()), rate));
  ctx.log->info("wrote {} ({} samples)", out.string(), est.size());
  return 0;
}

int run_adapt(const RunContext& ctx, const AdaptOptions& o) {
  const RunConfig& cfg = ctx.config;
  const Experiment ex = prepare_experiment(cfg);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  std::vector<NewClassShots> classes =
      o.shots.empty() ? ex.shots : load_shots(o.shots, cfg.scene.sample_rate_hz);
  require(!classes.empty(), ErrorCode::kConfig,
          "no new classes: pass --shots or set held_out", "adapt");
  std::vector<std::vector<RenderedScene>> sets;
  for (const auto& c : classes) {
    sets.push_back(build_adaptation_set(ex.train_bank, c, ex.noise, cfg.scene, cfg.adaptation,
                                        cfg.workers));
    ctx.log->info("class {}: {} shots, {} adaptation mixtures", c.label, c.shots.size(),
                  sets.back().size());
  }
  const AdaptationResult res = adapt(ck, classes, sets, cfg.adaptation);
  CheckpointMeta meta = ck.meta;
  meta.notes["adapt_init"] = to_string(cfg.adaptation.init);
  meta.notes["adapt_k_shots"] = std::to_string(cfg.adaptation.k_shots);
  meta.notes["adapt_epochs"] = std::to_string(cfg.adaptation.epochs);
  const fs::path out = pick(o.out, ctx.path("adapted.ckpt"));
  save_checkpoint(out, res.model, meta);

  json regs = json::array();
  for (const auto& r : res.registrations) {
    regs.push_back({{"label", r.label},
                    {"column", r.column},
                    {"init", to_string(r.init)},
                    {"shot_ids", r.shot_ids},
                    {"initial_loss", r.initial_loss},
                    {"epoch_losses", r.epoch_losses},
                    {"final_loss", r.final_loss}});
    ctx.log->info("class {} -> column {}: loss {:.3f} -> {:.3f}", r.label, r.column,
                  r.initial_loss, r.final_loss);
  }
  write_text(ctx.path("registrations.json"), regs.dump(2) + "\n");
  const CheckpointDiff diff = diff_checkpoints(o.checkpoint, out);
  write_text(ctx.path("diff.txt"), format_diff(diff));
  ctx.log->info("adapted checkpoint {}; parameter changes confined to new columns: {}",
                out.string(), diff.only_new_columns_changed() ? "yes" : "NO");
  return diff.only_new_columns_changed() ? 0 : 1;
}

int run_evaluate(const RunContext& ctx, const EvaluateOptions& o) {
  const RunConfig& cfg = ctx.config;
  require(o.test_set == "seen" || o.test_set == "new", ErrorCode::kConfig,
          "must be seen or new", "--set");
  const EmbeddingSource source = parse_embedding_source(o.policy);
  const Experiment ex = prepare_experiment(cfg);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const std::string mode = ck.meta.mode;
  std::string init_tag;
  if (auto it = ck.meta.notes.find("adapt_init"); it != ck.meta.notes.end()) init_tag = it->second;
  int k = source == EmbeddingSource::kOneHot ? 0 : source == EmbeddingSource::kEnrollment ? 1 : o.k;
  if (source == EmbeddingSource::kAdapted) {
    auto it = ck.meta.notes.find("adapt_k_shots");
    k = it != ck.meta.notes.end() ? std::stoi(it->second) : cfg.adaptation.k_shots;
  }
  const std::uint64_t seed = derive_seed(cfg.seed, {fnv1a("evaluate")});

  EvalOptions eo;
  eo.model_tag = mode;
  eo.init_tag = init_tag;
  eo.metric = cfg.metric;
  eo.workers = cfg.workers;
  std::vector<EvalRecord> records;
  if (o.test_set == "seen") {
    const auto scenes = scenes_for(ctx, ex, "test", o.data);
    eo.test_set = "seen";
    records = evaluate(ck.model, scenes, ex.test_bank, EmbeddingPolicy{source, o.k, seed}, eo);
  } else {
    const auto scenes = scenes_for(ctx, ex, "new_test", o.data);
    // Seen events use the model's own conditioning; the new event uses the
    // requested policy with shots from the held-out enrollment material.
    const EmbeddingSource seen_source = mode == "enrollment" ? EmbeddingSource::kEnrollment
                                                            : EmbeddingSource::kOneHot;
    eo.test_set = "new_seen";
    eo.targets = TargetSelection::kOtherEvents;
    records = evaluate(ck.model, scenes, ex.test_bank, EmbeddingPolicy{seen_source, 1, seed}, eo);
    eo.test_set = "new";
    eo.targets = TargetSelection::kManifestTarget;
    const EventBank shots = shots_bank(ex);
    auto fresh = evaluate(ck.model, scenes, shots, EmbeddingPolicy{source, o.k, seed}, eo);
    for (auto& r : fresh) r.k = k;
    records.insert(records.end(), fresh.begin(), fresh.end());
  }
  const fs::path out = pick(o.out, ctx.path("records.jsonl"));
  write_records(out, records);
  log_summary(ctx, records);
  const auto errors = std::count_if(records.begin(), records.end(),
                                    [](const EvalRecord& r) { return !r.ok(); });
  ctx.log->info("wrote {} records to {}", records.size(), out.string());
  if (errors > 0) {
    ctx.log->error("{} record-level errors:\n{}", errors, render_errors(records));
    return 1;
  }
  return 0;
}

int run_report(const RunContext& ctx, const ReportOptionsCli& o) {
  require(!o.records.empty(), ErrorCode::kConfig, "at least one file required", "--records");
  std::vector<EvalRecord> records;
  for (const auto& p : o.records) {
    auto r = read_records(p);
    records.insert(records.end(), r.begin(), r.end());
  }
  const fs::path out = pick(o.out, ctx.run_dir);
  ReportOptions ro;
  ro.reference_rows = o.reference_rows;
  const std::string t1 = render_table1(records, ro);
  const std::string t2 = render_table2(records, ro);
  const std::string pc = render_per_class(records, "new") + render_per_class(records, "seen");
  write_text(out / "table1.txt", t1);
  write_text(out / "table2.txt", t2);
  write_text(out / "per_class.txt", pc);
  write_text(out / "per_class_new.svg", render_per_class_svg(records, "new"));
  write_text(out / "per_class_seen.svg", render_per_class_svg(records, "seen"));
  write_records(out / "records.jsonl", records);
  std::string summary;
  for (const auto& row : summarize(records, {"model", "init", "test_set", "embedding_source", "k"})) {
    json j;
    for (const auto& [key, value] : row.key) j[key] = value;
    j["mean_sdri_db"] = row.mean;
    j["std_sdri_db"] = row.stddev;
    j["count"] = row.count;
    summary += j.dump() + "\n";
  }
  write_text(out / "summary.jsonl", summary);
  const std::string errors = render_errors(records);
  std::fputs((t1 + "\n" + t2 + "\n" + pc + errors).c_str(), stdout);
  ctx.log->info("report written to {}", out.string());
  const bool any_error = std::any_of(records.begin(), records.end(),
                                     [](const EvalRecord& r) { return !r.ok(); });
  return any_error ? 1 : 0;
}

}  // namespace tse::cli
