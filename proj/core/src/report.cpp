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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "tse/error.hpp"
#include "tse/evaluation.hpp"

namespace tse {

namespace {

std::string field_of(const EvalRecord& r, const std::string& f) {
  if (f == "scene_id") return r.scene_id;
  if (f == "target_class") return r.target_class;
  if (f == "embedding_source") return r.embedding_source;
  if (f == "k") return std::to_string(r.k);
  if (f == "model") return r.model;
  if (f == "test_set") return r.test_set;
  if (f == "init") return r.init;
  fail(ErrorCode::kInvalidArgument, "unknown grouping field", f);
}

std::string fixed(double v, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct Stats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
};

std::string cell(const std::map<std::string, Stats>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end() || it->second.n == 0) return "-";
  return fixed(it->second.mean()) + " (n=" + std::to_string(it->second.n) + ")";
}

std::string render_grid(const std::string& corner, const std::vector<std::string>& columns,
                        const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::vector<std::size_t> width(columns.size() + 1, corner.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c + 1] = columns[c].size();
  for (const auto& [label, cells] : rows) {
    width[0] = std::max(width[0], label.size());
    for (std::size_t c = 0; c < cells.size(); ++c) width[c + 1] = std::max(width[c + 1], cells[c].size());
  }
  std::ostringstream os;
  auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  os << pad(corner, width[0]);
  for (std::size_t c = 0; c < columns.size(); ++c) os << "  " << pad(columns[c], width[c + 1]);
  os << "\n";
  std::size_t total = width[0];
  for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
  os << std::string(total, '-') << "\n";
  for (const auto& [label, cells] : rows) {
    os << pad(label, width[0]);
    for (std::size_t c = 0; c < cells.size(); ++c) os << "  " << pad(cells[c], width[c + 1]);
    os << "\n";
  }
  return os.str();
}

std::string model_label(const std::string& mode) {
  if (mode == "one_hot") return "1-hot";
  if (mode == "enrollment") return "Enrl";
  if (mode == "mixed") return "Mixed";
  if (mode == "mixed_el") return "Mixed+EL";
  return mode;
}

std::string variant_label(const EvalRecord& r) {
  std::string s = model_label(r.model);
  if (!r.init.empty()) s += " +adapt (" + r.init + " init)";
  return s;
}

const std::vector<std::string> kModes = {"one_hot", "enrollment", "mixed", "mixed_el"};

std::string condition_label(const EvalRecord& r) {
  std::string s = model_label(r.model) + "/" + r.embedding_source;
  if (r.k > 0) s += " K=" + std::to_string(r.k);
  if (!r.init.empty()) s += " " + r.init;
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const EvalRecord> records,
                                  const std::vector<std::string>& fields) {
  std::map<std::vector<std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    std::vector<std::string> key;
    for (const auto& f : fields) key.push_back(field_of(r, f));
    groups[key].push_back(r.sdri_db);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    for (std::size_t i = 0; i < fields.size(); ++i) row.key[fields[i]] = key[i];
    row.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_table1(std::span<const EvalRecord> records, const ReportOptions& o) {
  std::map<std::string, Stats> cells;
  Stats mixture;
  for (const auto& r : records) {
    if (!r.ok() || r.test_set != "seen") continue;
    cells[r.embedding_source + "|" + r.model].add(r.sdri_db);
    mixture.add(r.sdr_mixture_db);
  }
  std::vector<std::string> columns;
  for (const auto& m : kModes) columns.push_back(model_label(m));
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  for (const auto& [source, label] :
       std::vector<std::pair<std::string, std::string>>{{"one_hot", "1-hot"},
                                                        {"enrollment", "Enrl"}}) {
    std::vector<std::string> row;
    for (const auto& m : kModes) row.push_back(cell(cells, source + "|" + m));
    rows.emplace_back(label, row);
  }
  if (o.reference_rows) {
    rows.emplace_back("1-hot (ref)", std::vector<std::string>{"11.4", "-", "12.6", "12.9"});
    rows.emplace_back("Enrl (ref)", std::vector<std::string>{"-", "10.4", "10.5", "10.1"});
  }
  std::ostringstream os;
  os << "SDR improvement [dB], seen-class test set\n";
  os << render_grid("embedding at test", columns, rows);
  if (mixture.n > 0) {
    os << "mixture SDR: " << fixed(mixture.mean()) << " dB";
    if (o.reference_rows) os << " (ref: -3.6 dB)";
    os << "\n";
  }
  return os.str();
}

std::string render_table2(std::span<const EvalRecord> records, const ReportOptions& o) {
  std::map<std::string, Stats> cells;
  std::vector<std::string> variants;
  std::set<int> ks;
  Stats mix_seen, mix_new;
  for (const auto& r : records) {
    if (!r.ok() || (r.test_set != "new" && r.test_set != "new_seen")) continue;
    const std::string v = variant_label(r);
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
    if (r.test_set == "new_seen") {
      cells[v + "|seen"].add(r.sdri_db);
      mix_seen.add(r.sdr_mixture_db);
    } else {
      cells[v + "|K=" + std::to_string(r.k)].add(r.sdri_db);
      ks.insert(r.k);
      mix_new.add(r.sdr_mixture_db);
    }
  }
  for (int k : {1, 5, 10}) ks.insert(k);
  std::vector<std::string> columns = {"Seen AEs"};
  for (int k : ks) columns.push_back("K=" + std::to_string(k));
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  for (const auto& v : variants) {
    std::vector<std::string> row = {cell(cells, v + "|seen")};
    for (int k : ks) row.push_back(cell(cells, v + "|K=" + std::to_string(k)));
    rows.emplace_back(v, row);
  }
  if (o.reference_rows) {
    const std::map<std::string, std::vector<std::string>> ref = {
        {"1-hot", {"10.5", "-", "-", "-"}},
        {"Enrl", {"10.4", "4.9", "7.0", "7.0"}},
        {"Mixed", {"11.6", "4.4", "7.2", "7.5"}},
        {"Mixed+EL", {"11.8", "3.2", "7.1", "7.4"}},
        {"Mixed+EL +adapt (random init)", {"-", "0.2", "3.4", "5.1"}},
        {"Mixed+EL +adapt (avg init)", {"-", "3.8", "7.8", "8.2"}}};
    for (const auto& [label, values] : ref) {
      std::vector<std::string> row = {values[0]};
      for (int k : ks) {
        row.push_back(k == 1 ? values[1] : k == 5 ? values[2] : k == 10 ? values[3] : "-");
      }
      rows.emplace_back(label + " (ref)", row);
    }
  }
  std::ostringstream os;
  os << "SDR improvement [dB], mixtures with new classes\n";
  os << render_grid("model", columns, rows);
  if (mix_seen.n > 0 || mix_new.n > 0) {
    os << "mixture SDR: seen " << (mix_seen.n ? fixed(mix_seen.mean()) : "-") << " dB, new "
       << (mix_new.n ? fixed(mix_new.mean()) : "-") << " dB";
    if (o.reference_rows) os << " (ref: -3.4 / -4.0 dB)";
    os << "\n";
  }
  return os.str();
}

std::string render_per_class(std::span<const EvalRecord> records, const std::string& test_set) {
  std::map<std::string, Stats> cells;
  std::vector<std::string> conditions;
  std::set<std::string> classes;
  for (const auto& r : records) {
    if (!r.ok() || r.test_set != test_set) continue;
    const std::string c = condition_label(r);
    if (std::find(conditions.begin(), conditions.end(), c) == conditions.end()) {
      conditions.push_back(c);
    }
    classes.insert(r.target_class);
    cells[r.target_class + "|" + c].add(r.sdri_db);
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  for (const auto& cls : classes) {
    std::vector<std::string> row;
    for (const auto& c : conditions) row.push_back(cell(cells, cls + "|" + c));
    rows.emplace_back(cls, row);
  }
  std::ostringstream os;
  os << "Per-class SDR improvement [dB], test set '" << test_set << "'\n";
  os << render_grid("class", conditions, rows);
  return os.str();
}

std::string render_errors(std::span<const EvalRecord> records) {
  std::ostringstream os;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.ok()) continue;
    ++n;
    os << "  " << r.scene_id << " [" << r.target_class << "]: " << r.error << "\n";
  }
  if (n == 0) return "record errors: none\n";
  return "record errors: " + std::to_string(n) + "\n" + os.str();
}

std::string render_per_class_svg(std::span<const EvalRecord> records,
                                 const std::string& test_set) {
  std::map<std::string, Stats> cells;
  std::vector<std::string> conditions;
  std::set<std::string> class_set;
  for (const auto& r : records) {
    if (!r.ok() || r.test_set != test_set) continue;
    const std::string c = condition_label(r);
    if (std::find(conditions.begin(), conditions.end(), c) == conditions.end()) {
      conditions.push_back(c);
    }
    class_set.insert(r.target_class);
    cells[r.target_class + "|" + c].add(r.sdri_db);
  }
  const std::vector<std::string> classes(class_set.begin(), class_set.end());
  double lo = 0.0, hi = 1.0;
  for (const auto& [k, s] : cells) {
    lo = std::min(lo, s.mean());
    hi = std::max(hi, s.mean());
  }
  const double label_w = 160, plot_w = 480, bar_h = 12, gap = 10, top = 40;
  const double group_h = bar_h * std::max<std::size_t>(1, conditions.size()) + gap;
  const double height = top + group_h * std::max<std::size_t>(1, classes.size()) + 30 +
                        16.0 * conditions.size();
  const double width = label_w + plot_w + 40;
  auto x_of = [&](double v) { return label_w + (v - lo) / (hi - lo) * plot_w; };
  static const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                  "#66ccee", "#aa3377", "#bbbbbb"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << label_w << "\" y=\"20\" font-size=\"13\">SDRi [dB] per class ("
     << xml_escape(test_set) << ")</text>\n";
  os << "<line x1=\"" << x_of(0) << "\" y1=\"" << top - 5 << "\" x2=\"" << x_of(0) << "\" y2=\""
     << top + group_h * classes.size() << "\" stroke=\"#000\"/>\n";
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const double y0 = top + ci * group_h;
    os << "<text x=\"" << label_w - 6 << "\" y=\"" << y0 + group_h / 2
       << "\" text-anchor=\"end\">" << xml_escape(classes[ci]) << "</text>\n";
    for (std::size_t k = 0; k < conditions.size(); ++k) {
      auto it = cells.find(classes[ci] + "|" + conditions[k]);
      if (it == cells.end()) continue;
      const double v = it->second.mean();
      const double x = std::min(x_of(0), x_of(v));
      os << "<rect x=\"" << x << "\" y=\"" << y0 + k * bar_h << "\" width=\""
         << std::abs(x_of(v) - x_of(0)) << "\" height=\"" << bar_h - 2 << "\" fill=\""
         << palette[k % 7] << "\"><title>" << xml_escape(conditions[k]) << ": " << fixed(v, 2)
         << "</title></rect>\n";
    }
  }
  double ly = top + group_h * classes.size() + 20;
  for (std::size_t k = 0; k < conditions.size(); ++k, ly += 16) {
    os << "<rect x=\"" << label_w << "\" y=\"" << ly - 10 << "\" width=\"10\" height=\"10\" fill=\""
       << palette[k % 7] << "\"/><text x=\"" << label_w + 16 << "\" y=\"" << ly << "\">"
       << xml_escape(conditions[k]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tse
