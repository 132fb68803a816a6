#include "flowgraph/flow_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "flowgraph/error.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

// UNSW-NB15 CSV layout (the four raw files ship without a header row).
const std::vector<std::string> kUnswColumns = {
    "srcip", "sport", "dstip", "dsport", "proto", "state", "dur", "sbytes", "dbytes", "sttl",
    "dttl", "sloss", "dloss", "service", "Sload", "Dload", "Spkts", "Dpkts", "swin", "dwin",
    "stcpb", "dtcpb", "smeansz", "dmeansz", "trans_depth", "res_bdy_len", "Sjit", "Djit",
    "Stime", "Ltime", "Sintpkt", "Dintpkt", "tcprtt", "synack", "ackdat", "is_sm_ips_ports",
    "ct_state_ttl", "ct_flw_http_mthd", "is_ftp_login", "ct_ftp_cmd", "ct_srv_src",
    "ct_srv_dst", "ct_dst_ltm", "ct_src_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm",
    "ct_dst_src_ltm", "attack_cat", "Label"};

// CIC-IDS2017 "TrafficLabelling" CSV layout. The raw header repeats
// "Fwd Header Length"; the loader renames the second occurrence ".1".
const std::vector<std::string> kCicColumns = {
    "Flow ID", "Source IP", "Source Port", "Destination IP", "Destination Port", "Protocol",
    "Timestamp", "Flow Duration", "Total Fwd Packets", "Total Backward Packets",
    "Total Length of Fwd Packets", "Total Length of Bwd Packets", "Fwd Packet Length Max",
    "Fwd Packet Length Min", "Fwd Packet Length Mean", "Fwd Packet Length Std",
    "Bwd Packet Length Max", "Bwd Packet Length Min", "Bwd Packet Length Mean",
    "Bwd Packet Length Std", "Flow Bytes/s", "Flow Packets/s", "Flow IAT Mean", "Flow IAT Std",
    "Flow IAT Max", "Flow IAT Min", "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std",
    "Fwd IAT Max", "Fwd IAT Min", "Bwd IAT Total", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max",
    "Bwd IAT Min", "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s", "Bwd Packets/s",
    "Min Packet Length", "Max Packet Length", "Packet Length Mean", "Packet Length Std",
    "Packet Length Variance", "FIN Flag Count", "SYN Flag Count", "RST Flag Count",
    "PSH Flag Count", "ACK Flag Count", "URG Flag Count", "CWE Flag Count", "ECE Flag Count",
    "Down/Up Ratio", "Average Packet Size", "Avg Fwd Segment Size", "Avg Bwd Segment Size",
    "Fwd Header Length.1", "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate",
    "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate", "Subflow Fwd Packets",
    "Subflow Fwd Bytes", "Subflow Bwd Packets", "Subflow Bwd Bytes", "Init_Win_bytes_forward",
    "Init_Win_bytes_backward", "act_data_pkt_fwd", "min_seg_size_forward", "Active Mean",
    "Active Std", "Active Max", "Active Min", "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
    "Label"};

std::vector<std::string> without(const std::vector<std::string>& columns,
                                 std::initializer_list<std::string_view> excluded) {
  std::vector<std::string> out;
  for (const auto& c : columns) {
    if (std::find(excluded.begin(), excluded.end(), c) == excluded.end()) out.push_back(c);
  }
  return out;
}

/// Maps schema column names onto positions of the header row. Matching is
/// whitespace- and case-insensitive; repeated header names get ".1", ".2"...
class HeaderIndex {
 public:
  explicit HeaderIndex(const std::vector<std::string>& header) {
    std::unordered_map<std::string, int> seen;
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::string key = lowercase(trim(header[i]));
      const int count = seen[key]++;
      if (count > 0) key += "." + std::to_string(count);
      positions_.emplace(std::move(key), i);
    }
  }

  std::optional<std::size_t> find(std::string_view column) const {
    auto it = positions_.find(lowercase(trim(column)));
    if (it == positions_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(std::string_view column) const {
    if (auto pos = find(column)) return *pos;
    throw SchemaError("column '" + std::string(column) + "' not found in header");
  }

 private:
  std::unordered_map<std::string, std::size_t> positions_;
};

bool matches_header(const std::vector<std::string>& fields,
                    const std::vector<std::string>& names) {
  if (fields.size() != names.size()) return false;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (lowercase(trim(fields[i])) != lowercase(trim(names[i]))) return false;
  }
  return true;
}

bool all_blank(const std::vector<std::string>& fields) {
  return std::all_of(fields.begin(), fields.end(),
                     [](const std::string& f) { return trim(f).empty(); });
}

}  // namespace

void DatasetSchema::validate() const {
  if (source_column.empty() || destination_column.empty()) {
    throw SchemaError("schema '" + name + "': source and destination columns are required");
  }
  if (lowercase(source_column) == lowercase(destination_column)) {
    throw SchemaError("schema '" + name + "': source and destination column are both '" +
                      source_column + "'");
  }
  if (feature_columns.empty()) {
    throw SchemaError("schema '" + name + "': no numeric feature columns");
  }
  std::set<std::string> unique;
  for (const auto& c : feature_columns) {
    if (!unique.insert(lowercase(c)).second) {
      throw SchemaError("schema '" + name + "': duplicate feature column '" + c + "'");
    }
  }
  if (!unique.contains(lowercase(weight_column))) {
    throw SchemaError("schema '" + name + "': weight column '" + weight_column +
                      "' is not a numeric feature column");
  }
  if (label_column && positive_label_values.empty() && normal_label_values.empty()) {
    throw SchemaError("schema '" + name +
                      "': a label column needs positive or normal label values");
  }
  if (delimiter == '"' || delimiter == '\n' || delimiter == '\r') {
    throw SchemaError("schema '" + name + "': invalid delimiter");
  }
}

bool DatasetSchema::is_attack_label(std::string_view value) const {
  const std::string key(trim(value));
  if (!positive_label_values.empty()) return positive_label_values.contains(key);
  return !normal_label_values.contains(key);
}

std::size_t DatasetSchema::feature_index(std::string_view column) const {
  const std::string key = lowercase(trim(column));
  for (std::size_t i = 0; i < feature_columns.size(); ++i) {
    if (lowercase(feature_columns[i]) == key) return i;
  }
  throw SchemaError("column '" + std::string(column) + "' is not a numeric feature of schema '" +
                    name + "'");
}

DatasetSchema schema_preset(std::string_view name) {
  DatasetSchema s;
  if (name == "unsw-nb15") {
    s.name = "unsw-nb15";
    s.source_column = "srcip";
    s.destination_column = "dstip";
    s.label_column = "Label";
    s.attack_category_column = "attack_cat";
    s.feature_columns = without(kUnswColumns, {"srcip", "dstip", "attack_cat", "Label"});
    s.weight_column = "Spkts";
    s.positive_label_values = {"1"};
    s.column_names = kUnswColumns;
  } else if (name == "cic-ids2017") {
    s.name = "cic-ids2017";
    s.source_column = "Source IP";
    s.destination_column = "Destination IP";
    s.label_column = "Label";
    s.feature_columns = without(kCicColumns, {"Flow ID", "Source IP", "Destination IP",
                                              "Timestamp", "Label"});
    s.attack_category_column = "Label";
    s.weight_column = "Total Fwd Packets";
    s.normal_label_values = {"BENIGN"};
  } else {
    throw SchemaError("unknown schema preset '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> schema_preset_names() { return {"cic-ids2017", "unsw-nb15"}; }

DatasetSchema schema_from_json(const nlohmann::json& j) {
  if (j.is_string()) return schema_preset(j.get<std::string>());
  if (!j.is_object()) throw SchemaError("schema must be a preset name or an object");

  DatasetSchema s;
  if (j.contains("preset")) s = schema_preset(j.at("preset").get<std::string>());
  try {
    s.name = j.value("name", s.name);
    s.source_column = j.value("source_column", s.source_column);
    s.destination_column = j.value("destination_column", s.destination_column);
    if (j.contains("label_column")) {
      s.label_column = j["label_column"].is_null()
                           ? std::nullopt
                           : std::optional(j["label_column"].get<std::string>());
    }
    if (j.contains("attack_category_column")) {
      s.attack_category_column =
          j["attack_category_column"].is_null()
              ? std::nullopt
              : std::optional(j["attack_category_column"].get<std::string>());
    }
    if (j.contains("feature_columns")) {
      s.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
    }
    s.weight_column = j.value("weight_column", s.weight_column);
    if (j.contains("positive_label_values")) {
      s.positive_label_values = j["positive_label_values"].get<std::set<std::string>>();
    }
    if (j.contains("normal_label_values")) {
      s.normal_label_values = j["normal_label_values"].get<std::set<std::string>>();
    }
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      if (d == "\\t" || d == "tab") {
        s.delimiter = '\t';
      } else if (d.size() == 1) {
        s.delimiter = d[0];
      } else {
        throw SchemaError("delimiter must be a single character");
      }
    }
    if (j.contains("column_names")) {
      s.column_names = j["column_names"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  return s;
}

nlohmann::json schema_to_json(const DatasetSchema& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["source_column"] = s.source_column;
  j["destination_column"] = s.destination_column;
  j["label_column"] = s.label_column ? nlohmann::json(*s.label_column) : nlohmann::json();
  j["attack_category_column"] =
      s.attack_category_column ? nlohmann::json(*s.attack_category_column) : nlohmann::json();
  j["feature_columns"] = s.feature_columns;
  j["weight_column"] = s.weight_column;
  j["positive_label_values"] = s.positive_label_values;
  j["normal_label_values"] = s.normal_label_values;
  j["delimiter"] = std::string(1, s.delimiter);
  j["column_names"] = s.column_names;
  return j;
}

FlowDataset::FlowDataset(DatasetSchema schema, std::vector<FlowRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  for (const auto& r : records_) {
    if (r.features.size() != schema_.m()) {
      throw ArgumentError("record " + std::to_string(r.index) + " has " +
                          std::to_string(r.features.size()) + " features, schema expects " +
                          std::to_string(schema_.m()));
    }
  }
}

FlowDataset FlowDataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, records_.size());
  begin = std::min(begin, end);
  FlowDataset out;
  out.schema_ = schema_;
  out.records_.assign(records_.begin() + static_cast<std::ptrdiff_t>(begin),
                      records_.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Matrix FlowDataset::feature_matrix() const {
  Matrix x(m(), records_.size());
  for (std::size_t t = 0; t < records_.size(); ++t) {
    std::copy(records_[t].features.begin(), records_[t].features.end(), x.col(t).begin());
  }
  return x;
}

std::vector<bool> FlowDataset::labels() const {
  if (!has_labels()) throw DataError("dataset has no label column");
  std::vector<bool> out(records_.size());
  for (std::size_t t = 0; t < records_.size(); ++t) out[t] = records_[t].label.value_or(false);
  return out;
}

std::size_t FlowDataset::attack_count() const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                [](const FlowRecord& r) { return r.label.value_or(false); }));
}

FlowDataset parse_dataset(std::istream& in, const DatasetSchema& schema,
                          std::string_view source_name) {
  schema.validate();
  const std::string where(source_name);

  std::vector<std::string> fields;
  std::size_t line_number = 0;
  std::vector<std::string> header = schema.column_names;
  bool pending_row = false;

  // Leading '#' lines carry provenance comments and are skipped.
  for (;;) {
    if (!read_delimited_record(in, schema.delimiter, fields, line_number)) {
      if (in.bad()) throw IoError("read failure in " + where);
      if (header.empty()) throw SchemaError(where + ": missing header row");
      throw EmptyDatasetError(where + ": no data rows");
    }
    if (!fields.empty() && trim(fields.front()).starts_with('#')) continue;
    if (all_blank(fields)) continue;
    if (header.empty()) {
      header = fields;
      if (!header.empty() && header.front().starts_with("\xEF\xBB\xBF")) {
        header.front().erase(0, 3);
      }
    } else if (!matches_header(fields, header)) {
      pending_row = true;
    }
    break;
  }

  const HeaderIndex index(header);
  const std::size_t src_pos = index.require(schema.source_column);
  const std::size_t dst_pos = index.require(schema.destination_column);
  std::optional<std::size_t> label_pos;
  if (schema.label_column) label_pos = index.require(*schema.label_column);
  std::optional<std::size_t> category_pos;
  if (schema.attack_category_column) category_pos = index.require(*schema.attack_category_column);
  std::vector<std::size_t> feature_pos;
  feature_pos.reserve(schema.m());
  for (const auto& c : schema.feature_columns) feature_pos.push_back(index.require(c));

  const std::size_t m = schema.m();
  std::vector<double> finite_max(m, -std::numeric_limits<double>::infinity());
  std::vector<double> finite_min(m, std::numeric_limits<double>::infinity());
  std::vector<FlowRecord> records;

  auto cell = [&](std::size_t pos) -> std::string_view {
    return pos < fields.size() ? std::string_view(fields[pos]) : std::string_view();
  };

  for (;;) {
    if (!pending_row) {
      if (!read_delimited_record(in, schema.delimiter, fields, line_number)) break;
      if (all_blank(fields)) continue;
    }
    pending_row = false;

    FlowRecord r;
    r.index = records.size();
    r.src = std::string(trim(cell(src_pos)));
    r.dst = std::string(trim(cell(dst_pos)));
    if (r.src.empty() || r.dst.empty()) {
      throw DataError(where + ":" + std::to_string(line_number) + ": missing endpoint");
    }
    r.features.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double v =
          parse_number(cell(feature_pos[k])).value_or(std::numeric_limits<double>::quiet_NaN());
      r.features[k] = v;
      if (std::isfinite(v)) {
        finite_max[k] = std::max(finite_max[k], v);
        finite_min[k] = std::min(finite_min[k], v);
      }
    }
    if (label_pos) r.label = schema.is_attack_label(cell(*label_pos));
    if (category_pos) {
      const auto category = trim(cell(*category_pos));
      if (!category.empty()) r.attack_category = std::string(category);
    }
    records.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("read failure in " + where);
  if (records.empty()) throw EmptyDatasetError(where + ": no data rows");

  for (auto& r : records) {
    for (std::size_t k = 0; k < m; ++k) {
      double& v = r.features[k];
      if (std::isnan(v)) {
        v = 0.0;
      } else if (std::isinf(v)) {
        const double bound = v > 0 ? finite_max[k] : finite_min[k];
        v = std::isfinite(bound) ? bound : 0.0;
      }
    }
  }
  return FlowDataset(schema, std::move(records));
}

FlowDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");
  return parse_dataset(in, schema, path.string());
}

void write_dataset(std::ostream& out, const FlowDataset& ds) {
  const auto& s = ds.schema();
  const char d = s.delimiter;
  std::vector<std::string> header{s.source_column, s.destination_column};
  header.insert(header.end(), s.feature_columns.begin(), s.feature_columns.end());
  // A category column may double as the label column (CIC-IDS2017 style).
  const bool shared_category =
      s.label_column && s.attack_category_column &&
      lowercase(*s.label_column) == lowercase(*s.attack_category_column);
  if (s.label_column) header.push_back(*s.label_column);
  if (s.attack_category_column && !shared_category) header.push_back(*s.attack_category_column);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << d;
    out << quote_field(header[i], d);
  }
  out << '\n';

  std::string attack_text = s.positive_label_values.empty() ? "attack"
                                                            : *s.positive_label_values.begin();
  std::string normal_text;
  if (!s.normal_label_values.empty()) {
    normal_text = *s.normal_label_values.begin();
  } else {
    normal_text = s.positive_label_values.contains("0") ? "normal" : "0";
  }

  for (const auto& r : ds.records()) {
    out << quote_field(r.src, d) << d << quote_field(r.dst, d);
    for (double v : r.features) out << d << format_double(v);
    if (s.label_column) {
      std::string text = r.label.value_or(false) ? attack_text : normal_text;
      if (shared_category && r.label.value_or(false) && r.attack_category) text = *r.attack_category;
      out << d << quote_field(text, d);
    }
    if (s.attack_category_column && !shared_category) {
      out << d << quote_field(r.attack_category.value_or(""), d);
    }
    out << '\n';
  }
}

std::size_t prefix_length(std::size_t n, double fraction) {
  const double exact = fraction * static_cast<double>(n);
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) {
    return std::min(n, static_cast<std::size_t>(nearest));
  }
  return std::min(n, static_cast<std::size_t>(std::ceil(exact)));
}

std::vector<FlowDataset> prefix_split(const FlowDataset& ds, std::span<const double> fractions) {
  if (fractions.empty()) throw ArgumentError("prefix_split: empty fraction list");
  double previous = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw ArgumentError("prefix_split: fraction " + format_double(f) + " outside (0,1]");
    }
    if (f <= previous) throw ArgumentError("prefix_split: fractions must be strictly increasing");
    previous = f;
  }
  std::vector<FlowDataset> out;
  out.reserve(fractions.size());
  for (double f : fractions) out.push_back(ds.slice(0, prefix_length(ds.size(), f)));
  return out;
}

}  // namespace flowgraph
