#include "flowgraph/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "flowgraph/error.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {

using nlohmann::json;

namespace {

const std::vector<std::string> kColumnOrder = {"ocsvm", "lof", "iforest", kEnsembleMajority,
                                               kEnsembleAverage};

json ba_to_json(const BalancedAccuracy& ba) {
  return {{"value", encode_real(ba.value)},
          {"tpr", encode_real(ba.tpr)},
          {"tnr", encode_real(ba.tnr)},
          {"tp", ba.counts.tp},
          {"fn", ba.counts.fn},
          {"tn", ba.counts.tn},
          {"fp", ba.counts.fp},
          {"single_class", ba.single_class}};
}

BalancedAccuracy ba_from_json(const json& j) {
  BalancedAccuracy ba;
  ba.value = decode_real(j.at("value"));
  ba.tpr = decode_real(j.at("tpr"));
  ba.tnr = decode_real(j.at("tnr"));
  ba.counts = {j.at("tp").get<std::size_t>(), j.at("fn").get<std::size_t>(),
               j.at("tn").get<std::size_t>(), j.at("fp").get<std::size_t>()};
  ba.single_class = j.at("single_class").get<bool>();
  return ba;
}

json cell_to_json(const CellResult& c) {
  json j = {{"regime", to_string(c.regime)}, {"detector", c.detector}};
  if (c.failed) {
    j["failed"] = true;
    j["error"] = c.error;
  } else {
    j["ba"] = ba_to_json(c.ba);
  }
  if (c.params) j["params"] = params_to_json(*c.params);
  return j;
}

CellResult cell_from_json(const json& j) {
  CellResult c;
  c.regime = parse_regime(j.at("regime").get<std::string>());
  c.detector = j.at("detector").get<std::string>();
  c.failed = j.value("failed", false);
  if (c.failed) {
    c.error = j.value("error", "");
  } else {
    c.ba = ba_from_json(j.at("ba"));
  }
  if (j.contains("params")) c.params = params_from_json(j.at("params"));
  return c;
}

json cells_to_json(const std::vector<CellResult>& cells) {
  json out = json::array();
  for (const auto& c : cells) out.push_back(cell_to_json(c));
  return out;
}

std::vector<CellResult> cells_from_json(const json& j) {
  std::vector<CellResult> out;
  if (j.is_array()) {
    for (const auto& c : j) out.push_back(cell_from_json(c));
  }
  return out;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(widths[i] - row[i].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

std::vector<std::string> present_columns(const std::vector<CellResult>& cells) {
  std::vector<std::string> cols;
  for (const auto& name : kColumnOrder) {
    if (std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.detector == name; })) {
      cols.push_back(name);
    }
  }
  for (const auto& c : cells) {
    if (std::find(cols.begin(), cols.end(), c.detector) == cols.end()) cols.push_back(c.detector);
  }
  return cols;
}

std::string ba_cell(const CellResult& c) {
  if (c.failed) return "failed";
  return fixed(c.ba.value) + (c.ba.single_class ? "*" : "");
}

std::string render_ba_table(const EvalReport& report, const std::vector<CellResult>& cells,
                            bool with_shapes) {
  std::vector<Regime> regimes;
  for (const auto& c : cells) {
    if (std::find(regimes.begin(), regimes.end(), c.regime) == regimes.end()) {
      regimes.push_back(c.regime);
    }
  }
  std::sort(regimes.begin(), regimes.end());
  const auto cols = present_columns(cells);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"regime"};
  if (with_shapes) header.push_back("(rows, cols, outliers)");
  header.insert(header.end(), cols.begin(), cols.end());
  rows.push_back(header);
  for (Regime r : regimes) {
    std::vector<std::string> row = {std::string(to_string(r))};
    if (with_shapes) {
      auto it = report.shapes.find(r);
      if (it != report.shapes.end()) {
        row.push_back("(" + std::to_string(it->second.rows) + ", " +
                      std::to_string(it->second.cols) + ", " +
                      std::to_string(it->second.outliers) + ")");
      } else {
        row.push_back("-");
      }
    }
    for (const auto& name : cols) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) {
        return c.regime == r && c.detector == name;
      });
      row.push_back(it == cells.end() ? "-" : ba_cell(*it));
    }
    rows.push_back(row);
  }
  return render_table(rows);
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json j;
  j["stage"] = report.stage;
  j["evaluation"] = report.evaluation;
  j["config_hash"] = report.config_hash;
  j["ranges"] = json::array();
  for (const auto& r : report.ranges) {
    j["ranges"].push_back({{"stage", r.stage}, {"begin", r.begin}, {"end", r.end}});
  }
  j["shapes"] = json::object();
  for (const auto& [regime, s] : report.shapes) {
    j["shapes"][std::string(to_string(regime))] = {
        {"rows", s.rows}, {"cols", s.cols}, {"outliers", s.outliers}};
  }
  j["cells"] = cells_to_json(report.cells);
  if (!report.candidates.empty()) j["candidates"] = cells_to_json(report.candidates);
  if (!report.next_block.empty()) j["next_block"] = cells_to_json(report.next_block);
  if (!report.breakdowns.empty()) {
    json b = json::array();
    for (const auto& e : report.breakdowns) {
      json counts = json::object();
      for (const auto& [cat, c] : e.counts) {
        counts[cat] = {{"detected", c.detected}, {"total", c.total}};
      }
      b.push_back({{"regime", to_string(e.regime)}, {"detector", e.detector}, {"counts", counts}});
    }
    j["breakdowns"] = b;
  }
  if (!report.rolling.empty()) {
    json r = json::array();
    for (const auto& p : report.rolling) {
      r.push_back({{"regime", to_string(p.regime)},
                   {"detector", p.detector},
                   {"fraction", p.fraction},
                   {"samples", p.samples},
                   {"tp", p.counts.tp},
                   {"fn", p.counts.fn},
                   {"tn", p.counts.tn},
                   {"fp", p.counts.fp},
                   {"tpr", encode_real(p.tpr)},
                   {"tnr", encode_real(p.tnr)},
                   {"scaled_fp", encode_real(p.scaled_fp)}});
    }
    j["rolling"] = r;
  }
  j["warnings"] = report.warnings;
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport report;
    report.stage = j.at("stage").get<std::string>();
    report.evaluation = j.value("evaluation", "");
    report.config_hash = j.value("config_hash", "");
    for (const auto& r : j.value("ranges", json::array())) {
      report.ranges.push_back({r.at("stage").get<std::string>(), r.at("begin").get<std::size_t>(),
                               r.at("end").get<std::size_t>()});
    }
    const json shapes = j.value("shapes", json::object());
    for (const auto& [name, s] : shapes.items()) {
      report.shapes[parse_regime(name)] = {s.at("rows").get<std::size_t>(),
                                           s.at("cols").get<std::size_t>(),
                                           s.at("outliers").get<std::size_t>()};
    }
    report.cells = cells_from_json(j.value("cells", json::array()));
    report.candidates = cells_from_json(j.value("candidates", json::array()));
    report.next_block = cells_from_json(j.value("next_block", json::array()));
    for (const auto& e : j.value("breakdowns", json::array())) {
      BreakdownEntry entry;
      entry.regime = parse_regime(e.at("regime").get<std::string>());
      entry.detector = e.at("detector").get<std::string>();
      for (const auto& [cat, c] : e.at("counts").items()) {
        entry.counts[cat] = {c.at("detected").get<std::size_t>(), c.at("total").get<std::size_t>()};
      }
      report.breakdowns.push_back(std::move(entry));
    }
    for (const auto& r : j.value("rolling", json::array())) {
      RollingPoint p;
      p.regime = parse_regime(r.at("regime").get<std::string>());
      p.detector = r.at("detector").get<std::string>();
      p.fraction = r.at("fraction").get<double>();
      p.samples = r.at("samples").get<std::size_t>();
      p.counts = {r.at("tp").get<std::size_t>(), r.at("fn").get<std::size_t>(),
                  r.at("tn").get<std::size_t>(), r.at("fp").get<std::size_t>()};
      p.tpr = decode_real(r.at("tpr"));
      p.tnr = decode_real(r.at("tnr"));
      p.scaled_fp = decode_real(r.at("scaled_fp"));
      report.rolling.push_back(p);
    }
    report.warnings = j.value("warnings", std::vector<std::string>{});
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

json timings_to_json(const EvalReport& report) {
  json out = json::array();
  const auto& cells = report.candidates.empty() ? report.cells : report.candidates;
  for (const auto& c : cells) {
    if (c.detector == kEnsembleMajority || c.detector == kEnsembleAverage) continue;
    json row = {{"regime", to_string(c.regime)},
                {"detector", c.detector},
                {"fit_seconds", c.fit_seconds}};
    if (c.params) row["params"] = c.params->describe();
    out.push_back(row);
  }
  return {{"stage", report.stage}, {"config_hash", report.config_hash}, {"timings", out}};
}

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  out << "stage: " << report.stage << "\n";
  if (!report.evaluation.empty()) out << "evaluation: " << report.evaluation << "\n";
  if (!report.config_hash.empty()) out << "config_hash: " << report.config_hash << "\n";
  for (const auto& r : report.ranges) {
    out << "records " << r.stage << ": [" << r.begin << ", " << r.end << ")\n";
  }
  if (!report.cells.empty()) {
    out << "\nBalanced accuracy\n" << render_ba_table(report, report.cells, true);
  }
  bool any_single = false;
  for (const auto* list : {&report.cells, &report.next_block}) {
    for (const auto& c : *list) any_single = any_single || (!c.failed && c.ba.single_class);
  }
  if (!report.next_block.empty()) {
    out << "\nBalanced accuracy on the next block (held out)\n"
        << render_ba_table(report, report.next_block, false);
  }
  if (any_single) out << "* only one class present; value is the defined rate\n";

  bool params_shown = false;
  for (const auto& c : report.cells) {
    if (!c.params) continue;
    if (!params_shown) out << "\nParameters\n";
    params_shown = true;
    out << "  " << to_string(c.regime) << "/" << c.detector << ": " << c.params->describe()
        << "\n";
  }
  for (const auto& c : report.cells) {
    if (c.failed) out << "  " << to_string(c.regime) << "/" << c.detector << " failed: "
                      << c.error << "\n";
  }

  for (const auto& e : report.breakdowns) {
    out << "\nDetected attacks by category: " << to_string(e.regime) << "/" << e.detector << "\n";
    std::vector<std::vector<std::string>> rows = {{"category", "detected", "total", "rate"}};
    for (const auto& [cat, c] : e.counts) {
      rows.push_back({cat, std::to_string(c.detected), std::to_string(c.total),
                      fixed(c.total ? static_cast<double>(c.detected) / static_cast<double>(c.total)
                                    : std::nan(""))});
    }
    out << render_table(rows);
  }

  if (!report.rolling.empty()) {
    out << "\nRolling test\n";
    std::vector<std::vector<std::string>> rows = {
        {"regime", "detector", "fraction", "samples", "tpr", "tnr", "fp", "scaled_fp"}};
    for (const auto& p : report.rolling) {
      rows.push_back({std::string(to_string(p.regime)), p.detector, format_double(p.fraction),
                      std::to_string(p.samples), fixed(p.tpr), fixed(p.tnr),
                      std::to_string(p.counts.fp), fixed(p.scaled_fp)});
    }
    out << render_table(rows);
  }

  if (!report.warnings.empty()) {
    out << "\nWarnings\n";
    for (const auto& w : report.warnings) out << "  " << w << "\n";
  }
  return out.str();
}

std::string render_timings(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows = {{"regime", "detector", "params", "fit_seconds"}};
  const auto& cells = report.candidates.empty() ? report.cells : report.candidates;
  for (const auto& c : cells) {
    if (c.detector == kEnsembleMajority || c.detector == kEnsembleAverage) continue;
    rows.push_back({std::string(to_string(c.regime)), c.detector,
                    c.params ? c.params->describe() : "-", fixed(c.fit_seconds, 3)});
  }
  return "stage: " + report.stage + "\n" + render_table(rows);
}

void write_rolling_csv(std::ostream& out, const EvalReport& report) {
  if (!report.config_hash.empty()) out << "# config_hash=" << report.config_hash << "\n";
  out << "regime,detector,fraction,samples,tp,fn,tn,fp,tpr,tnr,scaled_fp\n";
  for (const auto& p : report.rolling) {
    out << to_string(p.regime) << ',' << p.detector << ',' << format_double(p.fraction) << ','
        << p.samples << ',' << p.counts.tp << ',' << p.counts.fn << ',' << p.counts.tn << ','
        << p.counts.fp << ',' << format_double(p.tpr) << ',' << format_double(p.tnr) << ','
        << format_double(p.scaled_fp) << '\n';
  }
}

}  // namespace flowgraph
