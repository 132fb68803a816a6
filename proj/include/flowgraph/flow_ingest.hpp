#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowgraph/matrix.hpp"

namespace flowgraph {

/// Describes how a delimited flow table maps onto flow records.
///
/// A row is an attack when its label cell is in `positive_label_values`. If
/// that set is empty, any label not listed in `normal_label_values` counts
/// as an attack (the CIC-IDS2017 convention, where only "BENIGN" is normal).
struct DatasetSchema {
  std::string name = "generic";
  std::string source_column;
  std::string destination_column;
  std::optional<std::string> label_column;
  std::optional<std::string> attack_category_column;
  std::vector<std::string> feature_columns;
  std::string weight_column;
  std::set<std::string> positive_label_values;
  std::set<std::string> normal_label_values;
  char delimiter = ',';
  /// Column names for files without a header row. Empty means the first
  /// record is the header.
  std::vector<std::string> column_names;

  void validate() const;
  bool is_attack_label(std::string_view value) const;
  /// Position of `column` within feature_columns; throws SchemaError.
  std::size_t feature_index(std::string_view column) const;
  std::size_t m() const noexcept { return feature_columns.size(); }
};

/// Built-in presets: "cic-ids2017" and "unsw-nb15".
DatasetSchema schema_preset(std::string_view name);
std::vector<std::string> schema_preset_names();

DatasetSchema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const DatasetSchema& schema);

struct FlowRecord {
  /// Position in the source file (time order), 0-based.
  std::size_t index = 0;
  std::string src;
  std::string dst;
  std::vector<double> features;
  std::optional<bool> label;
  std::optional<std::string> attack_category;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// Immutable, time-ordered collection of flow records.
class FlowDataset {
 public:
  FlowDataset() = default;
  FlowDataset(DatasetSchema schema, std::vector<FlowRecord> records);

  const DatasetSchema& schema() const noexcept { return schema_; }
  std::span<const FlowRecord> records() const noexcept { return records_; }
  const FlowRecord& operator[](std::size_t t) const { return records_[t]; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t m() const noexcept { return schema_.m(); }
  bool has_labels() const noexcept { return schema_.label_column.has_value(); }

  /// Records [begin, end), keeping their original indices.
  FlowDataset slice(std::size_t begin, std::size_t end) const;

  /// m x N matrix of flow features.
  Matrix feature_matrix() const;
  /// Per-record labels; throws DataError when the dataset is unlabeled.
  std::vector<bool> labels() const;
  std::size_t attack_count() const;

 private:
  DatasetSchema schema_;
  std::vector<FlowRecord> records_;
};

/// Parses a delimited flow table. Missing or non-numeric feature cells
/// become 0; +/-inf become the column's largest/smallest finite value.
FlowDataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema);
FlowDataset parse_dataset(std::istream& in, const DatasetSchema& schema,
                          std::string_view source_name = "<stream>");

/// Writes records back as a delimited table using the schema's column names.
void write_dataset(std::ostream& out, const FlowDataset& ds);

/// Number of records in the head fraction of an N-record stream: ceil(f*N),
/// with products within rounding noise of an integer snapped to it.
std::size_t prefix_length(std::size_t n, double fraction);

std::vector<FlowDataset> prefix_split(const FlowDataset& ds, std::span<const double> fractions);

}  // namespace flowgraph
