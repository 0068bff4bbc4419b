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

#include "tse/event_bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "json_util.hpp"
#include "tse/error.hpp"
#include "tse/rng.hpp"

namespace tse {

namespace {

using json = nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ParamSampler {
  const ClassRecipe& recipe;
  Rng& rng;

  double operator()(const std::string& name) const {
    auto it = recipe.params.find(name);
    if (it == recipe.params.end()) {
      fail(ErrorCode::kConfig, "recipe '" + recipe.recipe + "' needs parameter '" +
                                   name + "'",
           "bank.classes." + recipe.label);
    }
    const auto& r = it->second;
    return r.size() == 1 ? r[0] : uniform(rng, r[0], r[1]);
  }
};

// Two cascaded RBJ band-pass biquads.
std::vector<double> bandpass(std::vector<double> x, double centre_hz, double q,
                             int rate) {
  const double w0 = kTwoPi * centre_hz / rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  for (int pass = 0; pass < 2; ++pass) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
      const double y = b0 * v + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
  return x;
}

std::vector<double> white(Rng& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

// Linear ramps of `ramp` samples at both ends of [begin, end).
void apply_ramps(std::vector<double>& x, std::size_t begin, std::size_t end,
                 std::size_t ramp) {
  ramp = std::min(ramp, (end - begin) / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = static_cast<double>(i) / ramp;
    x[begin + i] *= g;
    x[end - 1 - i] *= g;
  }
}

std::vector<double> synth_harmonic(const ParamSampler& p, Rng& rng, std::size_t n,
                                   int rate) {
  std::vector<double> out(n, 0.0);
  const int harmonics = static_cast<int>(std::lround(p("harmonics")));
  std::size_t pos = 0;
  while (pos < n) {
    const auto len = std::min<std::size_t>(n - pos, std::lround(p("note_s") * rate));
    const double f0 = p("f0_hz");
    const double decay = 0.4 * len / rate;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / rate;
      double v = 0.0;
      for (int k = 1; k <= harmonics && k * f0 < 0.45 * rate; ++k) {
        v += std::sin(kTwoPi * k * f0 * t) / k;
      }
      out[pos + i] = v * std::exp(-t / decay);
    }
    apply_ramps(out, pos, pos + len, rate / 200);
    pos += len + std::lround(uniform(rng, 0.01, 0.05) * rate);
  }
  return out;
}

std::vector<double> synth_chirp(const ParamSampler& p, Rng& rng, std::size_t n,
                                int rate) {
  std::vector<double> out(n, 0.0);
  const double f_lo = p("f_lo_hz"), f_hi = p("f_hi_hz");
  std::size_t pos = 0;
  while (pos < n) {
    const auto len = std::min<std::size_t>(n - pos, std::lround(p("sweep_s") * rate));
    double phase = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double frac = static_cast<double>(i) / len;
      const double f = f_lo * std::pow(f_hi / f_lo, frac);
      phase += kTwoPi * f / rate;
      out[pos + i] = std::sin(phase);
    }
    apply_ramps(out, pos, pos + len, rate / 100);
    pos += len + std::lround(uniform(rng, 0.05, 0.2) * rate);
  }
  return out;
}

std::vector<double> synth_noise_burst(const ParamSampler& p, Rng& rng, std::size_t n,
                                      int rate) {
  auto noise = bandpass(white(rng, n), p("centre_hz"), p("q"), rate);
  std::vector<double> gate(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    const auto len = std::min<std::size_t>(n - pos, std::lround(p("burst_s") * rate));
    for (std::size_t i = 0; i < len; ++i) gate[pos + i] = 1.0;
    apply_ramps(gate, pos, pos + len, rate / 200);
    pos += len + std::lround(p("gap_s") * rate);
  }
  for (std::size_t i = 0; i < n; ++i) noise[i] *= gate[i];
  return noise;
}

std::vector<double> synth_am_noise(const ParamSampler& p, Rng& rng, std::size_t n,
                                   int rate) {
  auto noise = bandpass(white(rng, n), p("centre_hz"), p("q"), rate);
  const double am = p("rate_hz");
  const double phase = uniform(rng, 0.0, kTwoPi);
  for (std::size_t i = 0; i < n; ++i) {
    noise[i] *= 0.5 * (1.0 + 0.95 * std::sin(kTwoPi * am * i / rate + phase));
  }
  return noise;
}

std::vector<double> synth_knock(const ParamSampler& p, Rng& rng, std::size_t n,
                                int rate) {
  std::vector<double> out(n, 0.0);
  const double f = p("resonance_hz");
  const double decay = p("decay_s");
  const double mean_gap = 1.0 / p("rate_hz");
  const auto tail = static_cast<std::size_t>(8.0 * decay * rate);
  double t_hit = uniform(rng, 0.0, 0.1);
  while (true) {
    const auto start = static_cast<std::size_t>(t_hit * rate);
    if (start >= n) break;
    const double amp = uniform(rng, 0.6, 1.0);
    for (std::size_t i = 0; i < tail && start + i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      out[start + i] += amp * std::exp(-t / decay) *
                        (std::sin(kTwoPi * f * t) + 0.5 * std::sin(kTwoPi * 2.3 * f * t));
    }
    t_hit += mean_gap * uniform(rng, 0.5, 1.5);
  }
  return out;
}

std::vector<double> synth_siren(const ParamSampler& p, Rng& rng, std::size_t n,
                                int rate) {
  std::vector<double> out(n);
  const double carrier = p("carrier_hz"), depth = p("depth_hz"), fm = p("rate_hz");
  const double lfo_phase = uniform(rng, 0.0, kTwoPi);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = carrier + depth * std::sin(kTwoPi * fm * i / rate + lfo_phase);
    phase += kTwoPi * f / rate;
    out[i] = std::sin(phase) + 0.3 * std::sin(2.0 * phase);
  }
  return out;
}

const std::set<std::string>& known_recipes() {
  static const std::set<std::string> names = {"harmonic", "chirp", "noise_burst",
                                              "am_noise", "knock", "siren"};
  return names;
}

// Scales to RMS 0.1 so the scene generator sees clips on a common level.
void normalise(std::vector<double>& x) {
  double energy = 0.0;
  for (double v : x) energy += v * v;
  const double rms = std::sqrt(energy / x.size());
  if (rms > 0.0) {
    for (double& v : x) v *= 0.1 / rms;
  }
}

std::vector<double> synthesise(const ClassRecipe& recipe, Rng& rng, std::size_t n,
                               int rate) {
  ParamSampler p{recipe, rng};
  std::vector<double> x;
  if (recipe.recipe == "harmonic") x = synth_harmonic(p, rng, n, rate);
  else if (recipe.recipe == "chirp") x = synth_chirp(p, rng, n, rate);
  else if (recipe.recipe == "noise_burst") x = synth_noise_burst(p, rng, n, rate);
  else if (recipe.recipe == "am_noise") x = synth_am_noise(p, rng, n, rate);
  else if (recipe.recipe == "knock") x = synth_knock(p, rng, n, rate);
  else if (recipe.recipe == "siren") x = synth_siren(p, rng, n, rate);
  else fail(ErrorCode::kConfig, "unknown recipe '" + recipe.recipe + "'",
            "bank.classes." + recipe.label);
  normalise(x);
  return x;
}

std::string clip_id(const std::string& label, int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "/%03d", k);
  return label + buf;
}

}  // namespace

void BankSpec::validate() const {
  require(sample_rate_hz > 0, ErrorCode::kConfig, "must be positive",
          "bank.sample_rate_hz");
  require(clip_min_s > 0.0 && clip_min_s <= clip_max_s, ErrorCode::kConfig,
          "need 0 < clip_min_s <= clip_max_s", "bank.clip_min_s");
  require(!classes.empty(), ErrorCode::kConfig, "no classes", "bank.classes");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    const std::string where = "bank.classes." + c.label;
    require(!c.label.empty(), ErrorCode::kConfig, "empty label", "bank.classes");
    require(seen.insert(c.label).second, ErrorCode::kConfig, "duplicate label", where);
    require(c.count >= 2, ErrorCode::kConfig,
            "needs at least 2 clips so enrollment can differ from the target, got " +
                std::to_string(c.count),
            where + ".count");
    require(known_recipes().count(c.recipe) > 0, ErrorCode::kConfig,
            "unknown recipe '" + c.recipe + "'", where + ".recipe");
    for (const auto& [name, range] : c.params) {
      require(range.size() == 1 || (range.size() == 2 && range[0] <= range[1]),
              ErrorCode::kConfig, "expected [lo, hi] or [value]",
              where + ".params." + name);
    }
  }
  require(noise.count >= 1, ErrorCode::kConfig, "must be >= 1", "bank.noise.count");
  require(noise.tilt_min >= 0.0 && noise.tilt_min <= noise.tilt_max && noise.tilt_max < 1.0,
          ErrorCode::kConfig, "need 0 <= tilt_min <= tilt_max < 1", "bank.noise.tilt_min");
  require(noise.duration_s > 0.0, ErrorCode::kConfig, "must be positive",
          "bank.noise.duration_s");
}

BankSpec parse_bank_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what(), "bank");
  }
  return detail::bank_spec_from_json(j, default_bank_spec(), "bank");
}

namespace detail {

BankSpec bank_spec_from_json(const nlohmann::json& j, BankSpec spec,
                             const std::string& prefix) {
  jsonutil::Reader r(j, prefix);
  r.get("seed", spec.seed);
  r.get("sample_rate_hz", spec.sample_rate_hz);
  r.get("clip_min_s", spec.clip_min_s);
  r.get("clip_max_s", spec.clip_max_s);
  if (r.has("noise")) {
    jsonutil::Reader n(j.at("noise"), prefix + ".noise");
    n.get("count", spec.noise.count);
    n.get("tilt_min", spec.noise.tilt_min);
    n.get("tilt_max", spec.noise.tilt_max);
    n.get("duration_s", spec.noise.duration_s);
    n.reject_unknown();
    r.mark("noise");
  }
  if (r.has("classes")) {
    spec.classes.clear();
    for (const auto& c : j.at("classes")) {
      ClassRecipe recipe;
      jsonutil::Reader cr(c, prefix + ".classes");
      cr.get("label", recipe.label);
      cr.get("recipe", recipe.recipe);
      cr.get("count", recipe.count);
      if (cr.has("params")) {
        for (const auto& [name, value] : c.at("params").items()) {
          if (value.is_number()) {
            recipe.params[name] = {value.get<double>()};
          } else {
            recipe.params[name] = value.get<std::vector<double>>();
          }
        }
        cr.mark("params");
      }
      cr.reject_unknown();
      spec.classes.push_back(std::move(recipe));
    }
    r.mark("classes");
  }
  r.reject_unknown();
  spec.validate();
  return spec;
}

nlohmann::json bank_spec_to_json_value(const BankSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["sample_rate_hz"] = spec.sample_rate_hz;
  j["clip_min_s"] = spec.clip_min_s;
  j["clip_max_s"] = spec.clip_max_s;
  j["noise"] = {{"count", spec.noise.count},
                {"tilt_min", spec.noise.tilt_min},
                {"tilt_max", spec.noise.tilt_max},
                {"duration_s", spec.noise.duration_s}};
  j["classes"] = json::array();
  for (const auto& c : spec.classes) {
    json params = json::object();
    for (const auto& [name, range] : c.params) params[name] = range;
    j["classes"].push_back(
        {{"label", c.label}, {"recipe", c.recipe}, {"count", c.count}, {"params", params}});
  }
  return j;
}

}  // namespace detail

BankSpec load_bank_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open bank spec", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bank_spec(ss.str());
}

std::string bank_spec_to_json(const BankSpec& spec) {
  return detail::bank_spec_to_json_value(spec).dump(2);
}

BankSpec default_bank_spec(int clips_per_class, std::uint64_t seed) {
  BankSpec spec;
  spec.seed = seed;
  auto add = [&](const char* label, const char* recipe,
                 std::map<std::string, std::vector<double>> params) {
    spec.classes.push_back({label, recipe, clips_per_class, std::move(params)});
  };
  add("harmonic_synth", "harmonic", {{"f0_hz", {150, 300}}, {"harmonics", {3, 6}}, {"note_s", {0.2, 0.5}}});
  add("chirp_synth", "chirp", {{"f_lo_hz", {300, 500}}, {"f_hi_hz", {1500, 2500}}, {"sweep_s", {0.3, 0.6}}});
  add("burst_synth", "noise_burst", {{"centre_hz", {2500, 3200}}, {"q", {2, 4}}, {"burst_s", {0.1, 0.3}}, {"gap_s", {0.05, 0.2}}});
  add("hum_synth", "am_noise", {{"centre_hz", {600, 900}}, {"q", {1, 2}}, {"rate_hz", {3, 6}}});
  add("knock_synth", "knock", {{"resonance_hz", {350, 600}}, {"decay_s", {0.02, 0.05}}, {"rate_hz", {2, 5}}});
  add("siren_synth", "siren", {{"carrier_hz", {900, 1200}}, {"depth_hz", {150, 300}}, {"rate_hz", {0.5, 1.5}}});
  return spec;
}

EventBank::EventBank(std::vector<EventClip> clips) : clips_(std::move(clips)) {
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    const auto& c = clips_[i];
    require(by_id_.emplace(c.source_id, i).second, ErrorCode::kInvalidArgument,
            "duplicate source id", c.source_id);
    if (std::find(labels_.begin(), labels_.end(), c.class_label) == labels_.end()) {
      labels_.push_back(c.class_label);
    }
  }
}

bool EventBank::has_class(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::vector<const EventClip*> EventBank::clips_of(const std::string& label) const {
  std::vector<const EventClip*> out;
  for (const auto& c : clips_) {
    if (c.class_label == label) out.push_back(&c);
  }
  return out;
}

const EventClip& EventBank::find(const std::string& source_id) const {
  auto it = by_id_.find(source_id);
  if (it == by_id_.end()) fail(ErrorCode::kOutOfRange, "unknown source id", source_id);
  return clips_[it->second];
}

bool EventBank::contains(const std::string& source_id) const {
  return by_id_.count(source_id) > 0;
}

EventBank EventBank::filtered(const std::vector<std::string>& labels) const {
  std::vector<EventClip> out;
  for (const auto& c : clips_) {
    if (std::find(labels.begin(), labels.end(), c.class_label) != labels.end()) {
      out.push_back(c);
    }
  }
  return EventBank(std::move(out));
}

EventBank build_event_bank(const BankSpec& spec) {
  spec.validate();
  std::vector<EventClip> clips;
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    const auto& recipe = spec.classes[ci];
    for (int k = 0; k < recipe.count; ++k) {
      Rng rng(derive_seed(spec.seed, {fnv1a(recipe.label), static_cast<std::uint64_t>(k)}));
      const double len_s = uniform(rng, spec.clip_min_s, spec.clip_max_s);
      const auto n = static_cast<std::size_t>(std::lround(len_s * spec.sample_rate_hz));
      clips.push_back({recipe.label,
                       Waveform(synthesise(recipe, rng, n, spec.sample_rate_hz),
                                spec.sample_rate_hz),
                       clip_id(recipe.label, k)});
    }
  }
  return EventBank(std::move(clips));
}

EventBank build_noise_bank(const BankSpec& spec) {
  spec.validate();
  std::vector<EventClip> clips;
  const auto n = static_cast<std::size_t>(std::lround(spec.noise.duration_s * spec.sample_rate_hz));
  for (int k = 0; k < spec.noise.count; ++k) {
    Rng rng(derive_seed(spec.seed, {fnv1a("noise"), static_cast<std::uint64_t>(k)}));
    const double tilt = uniform(rng, spec.noise.tilt_min, spec.noise.tilt_max);
    auto x = white(rng, n);
    double state = 0.0;
    for (double& v : x) {
      state = tilt * state + v;
      v = state;
    }
    normalise(x);
    clips.push_back({"noise", Waveform(std::move(x), spec.sample_rate_hz),
                     clip_id("noise/ar1", k)});
  }
  return EventBank(std::move(clips));
}

EventBank load_event_bank_dir(const std::filesystem::path& root, int expected_rate_hz) {
  namespace fs = std::filesystem;
  require(fs::is_directory(root), ErrorCode::kIo, "not a directory", root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  std::vector<EventClip> clips;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".wav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    const std::string label = dir.filename().string();
    require(files.size() >= 2, ErrorCode::kInvalidArgument,
            "class needs at least 2 clips", dir.string());
    for (const auto& f : files) {
      clips.push_back({label, read_wav(f, expected_rate_hz),
                       label + "/" + f.stem().string()});
    }
  }
  return EventBank(std::move(clips));
}

}  // namespace tse
