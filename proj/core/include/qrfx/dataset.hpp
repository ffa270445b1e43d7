#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qrfx {

enum class ColumnKind { feature, target, group };

struct ColumnSpec {
  std::string name;
  std::string unit;  // metadata only, never converted
  ColumnKind kind = ColumnKind::feature;
};

// Tabular data with an explicit missing mask. The schema covers the
// numeric columns; an optional group column (e.g. Gender) is carried
// separately as string labels.
class TabularDataset {
 public:
  std::vector<ColumnSpec> schema;       // size p, kinds feature/target
  std::vector<double> values;           // n*p row-major
  std::vector<std::uint8_t> missing;    // n*p, 1 = missing
  std::vector<std::string> group;       // size n, or empty when no group column
  std::string group_name;

  std::size_t n_rows() const { return schema.empty() ? 0 : values.size() / schema.size(); }
  std::size_t n_cols() const { return schema.size(); }

  double at(std::size_t i, std::size_t j) const { return values[i * n_cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n_cols() + j]; }
  bool is_missing(std::size_t i, std::size_t j) const { return missing[i * n_cols() + j] != 0; }
  void set_missing(std::size_t i, std::size_t j, bool m) { missing[i * n_cols() + j] = m ? 1 : 0; }

  // Index of a named column, or -1.
  int column_index(const std::string& name) const;
  // Index of the unique target column. Throws SchemaError if absent.
  std::size_t target_index() const;
  // Indices of feature columns, minus any named in `exclude`.
  std::vector<std::size_t> feature_indices(const std::vector<std::string>& exclude = {}) const;

  bool has_any_missing() const;
  void validate() const;
};

struct ColumnStats {
  std::optional<double> mean;  // nullopt when the column is fully missing
  std::optional<double> sd;    // sample SD (n-1); nullopt when < 2 observed
  double miss_pct = 0.0;       // exact, 0..100
  std::size_t n_obs = 0;
};

struct SummaryStats {
  std::vector<ColumnStats> columns;  // aligned with the dataset schema
};

std::vector<ColumnSpec> load_schema(const std::string& json_path);
void save_schema(const std::string& json_path, const std::vector<ColumnSpec>& schema);

// Empty cells and the literal "NA" (case-insensitive) are missing.
TabularDataset load_csv_dataset(const std::string& csv_path,
                                const std::vector<ColumnSpec>& schema);

void save_csv_dataset(const std::string& csv_path, const TabularDataset& d);

SummaryStats summarize(const TabularDataset& d);

TabularDataset subset_rows(const TabularDataset& d,
                           const std::vector<std::size_t>& rows);

std::map<std::string, TabularDataset> split_by_group(const TabularDataset& d);

// Appends a 0/1 feature column named "<group>_is<label>".
TabularDataset add_indicator(const TabularDataset& d, const std::string& from_group);

}  // namespace qrfx
