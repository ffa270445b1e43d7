#include "qrfx/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "qrfx/csv.hpp"
#include "qrfx/error.hpp"

namespace qrfx {
namespace {

bool is_missing_token(const std::string& s) {
  if (s.empty()) return true;
  if (s.size() == 2 && std::toupper(static_cast<unsigned char>(s[0])) == 'N' &&
      std::toupper(static_cast<unsigned char>(s[1])) == 'A')
    return true;
  return false;
}

ColumnKind kind_from_string(const std::string& s) {
  if (s == "feature") return ColumnKind::feature;
  if (s == "target") return ColumnKind::target;
  if (s == "group") return ColumnKind::group;
  throw SchemaError("unknown column kind: " + s);
}

const char* kind_to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::feature: return "feature";
    case ColumnKind::target: return "target";
    case ColumnKind::group: return "group";
  }
  return "feature";
}

void check_schema(const std::vector<ColumnSpec>& schema) {
  std::set<std::string> names;
  std::size_t targets = 0;
  for (const auto& c : schema) {
    if (!names.insert(c.name).second)
      throw SchemaError("duplicate column name: " + c.name);
    if (c.kind == ColumnKind::target) ++targets;
  }
  if (targets > 1) throw SchemaError("schema declares more than one target column");
}

}  // namespace

int TabularDataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (schema[j].name == name) return static_cast<int>(j);
  return -1;
}

std::size_t TabularDataset::target_index() const {
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (schema[j].kind == ColumnKind::target) return j;
  throw SchemaError("schema has no target column");
}

std::vector<std::size_t> TabularDataset::feature_indices(
    const std::vector<std::string>& exclude) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind != ColumnKind::feature) continue;
    if (std::find(exclude.begin(), exclude.end(), schema[j].name) != exclude.end())
      continue;
    out.push_back(j);
  }
  return out;
}

bool TabularDataset::has_any_missing() const {
  return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

void TabularDataset::validate() const {
  check_schema(schema);
  if (n_rows() < 1 || n_cols() < 1)
    throw ValidationError("dataset must have n >= 1 and p >= 1");
  if (values.size() != missing.size())
    throw ValidationError("values/missing size mismatch");
  if (!group.empty() && group.size() != n_rows())
    throw ValidationError("group label count does not match row count");
}

std::vector<ColumnSpec> load_schema(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw ParseError("cannot open schema file: " + json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("schema JSON: ") + e.what());
  }
  std::vector<ColumnSpec> schema;
  for (const auto& item : j) {
    ColumnSpec c;
    c.name = item.at("name").get<std::string>();
    c.unit = item.value("unit", std::string{});
    c.kind = kind_from_string(item.value("kind", std::string{"feature"}));
    schema.push_back(std::move(c));
  }
  check_schema(schema);
  return schema;
}

void save_schema(const std::string& json_path, const std::vector<ColumnSpec>& schema) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : schema)
    j.push_back({{"name", c.name}, {"unit", c.unit}, {"kind", kind_to_string(c.kind)}});
  std::ofstream out(json_path);
  if (!out) throw Error("cannot write schema file: " + json_path);
  out << j.dump(2) << '\n';
}

TabularDataset load_csv_dataset(const std::string& csv_path,
                                const std::vector<ColumnSpec>& schema) {
  check_schema(schema);
  CsvTable table = read_csv(csv_path);

  // Map schema columns onto CSV columns by name; every schema column must
  // exist and every CSV column must be declared.
  std::vector<int> csv_col(schema.size(), -1);
  for (std::size_t s = 0; s < schema.size(); ++s) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (table.header[c] == schema[s].name) csv_col[s] = static_cast<int>(c);
    if (csv_col[s] < 0)
      throw SchemaError("schema column not in CSV header: " + schema[s].name);
  }
  for (const auto& h : table.header) {
    bool known = false;
    for (const auto& c : schema)
      if (c.name == h) known = true;
    if (!known) throw SchemaError("unknown column in CSV header: " + h);
  }

  TabularDataset d;
  int group_col = -1;
  for (std::size_t s = 0; s < schema.size(); ++s) {
    if (schema[s].kind == ColumnKind::group) {
      if (group_col >= 0) throw SchemaError("more than one group column");
      group_col = csv_col[s];
      d.group_name = schema[s].name;
    } else {
      d.schema.push_back(schema[s]);
    }
  }

  const std::size_t p = d.schema.size();
  d.values.assign(table.rows.size() * p, 0.0);
  d.missing.assign(table.rows.size() * p, 0);
  if (group_col >= 0) d.group.reserve(table.rows.size());

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    std::size_t jj = 0;
    for (std::size_t s = 0; s < schema.size(); ++s) {
      if (schema[s].kind == ColumnKind::group) continue;
      const std::string& cell = row[csv_col[s]];
      if (is_missing_token(cell)) {
        d.missing[i * p + jj] = 1;
      } else {
        char* end = nullptr;
        double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
          throw ParseError("non-numeric cell at row " + std::to_string(i + 2) +
                           ", column '" + schema[s].name + "': " + cell);
        }
        d.values[i * p + jj] = v;
      }
      ++jj;
    }
    if (group_col >= 0) d.group.push_back(row[group_col]);
  }
  d.validate();
  return d;
}

void save_csv_dataset(const std::string& csv_path, const TabularDataset& d) {
  CsvTable table;
  for (const auto& c : d.schema) table.header.push_back(c.name);
  if (!d.group.empty()) table.header.push_back(d.group_name.empty() ? "Group" : d.group_name);
  const std::size_t p = d.n_cols();
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (std::size_t j = 0; j < p; ++j)
      row.push_back(d.is_missing(i, j) ? std::string{} : format_number(d.at(i, j)));
    if (!d.group.empty()) row.push_back(d.group[i]);
    table.rows.push_back(std::move(row));
  }
  write_csv(csv_path, table);
}

SummaryStats summarize(const TabularDataset& d) {
  SummaryStats stats;
  const std::size_t n = d.n_rows();
  for (std::size_t j = 0; j < d.n_cols(); ++j) {
    ColumnStats cs;
    double sum = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d.is_missing(i, j)) continue;
      sum += d.at(i, j);
      ++m;
    }
    cs.n_obs = m;
    cs.miss_pct = 100.0 * static_cast<double>(n - m) / static_cast<double>(n);
    if (m >= 1) {
      double mean = sum / static_cast<double>(m);
      cs.mean = mean;
      if (m >= 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (d.is_missing(i, j)) continue;
          double dv = d.at(i, j) - mean;
          ss += dv * dv;
        }
        cs.sd = std::sqrt(ss / static_cast<double>(m - 1));
      }
    }
    stats.columns.push_back(cs);
  }
  return stats;
}

TabularDataset subset_rows(const TabularDataset& d,
                           const std::vector<std::size_t>& rows) {
  TabularDataset out;
  out.schema = d.schema;
  out.group_name = d.group_name;
  const std::size_t p = d.n_cols();
  out.values.reserve(rows.size() * p);
  out.missing.reserve(rows.size() * p);
  for (std::size_t i : rows) {
    for (std::size_t j = 0; j < p; ++j) {
      out.values.push_back(d.at(i, j));
      out.missing.push_back(d.is_missing(i, j) ? 1 : 0);
    }
    if (!d.group.empty()) out.group.push_back(d.group[i]);
  }
  return out;
}

std::map<std::string, TabularDataset> split_by_group(const TabularDataset& d) {
  if (d.group.empty()) throw ValidationError("split_by_group: no group column");
  for (std::size_t i = 0; i < d.group.size(); ++i)
    if (d.group[i].empty())
      throw ValidationError("missing group label on row " + std::to_string(i + 1));

  std::map<std::string, TabularDataset> out;
  const std::size_t p = d.n_cols();
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    TabularDataset& g = out[d.group[i]];
    if (g.schema.empty()) {
      g.schema = d.schema;
      g.group_name = d.group_name;
    }
    for (std::size_t j = 0; j < p; ++j) {
      g.values.push_back(d.at(i, j));
      g.missing.push_back(d.is_missing(i, j) ? 1 : 0);
    }
    g.group.push_back(d.group[i]);
  }
  return out;
}

TabularDataset add_indicator(const TabularDataset& d, const std::string& from_group) {
  if (d.group.empty()) throw ValidationError("add_indicator: no group column");
  std::string name =
      (d.group_name.empty() ? std::string{"Group"} : d.group_name) + "_is" + from_group;
  if (d.column_index(name) >= 0)
    throw SchemaError("indicator column already exists: " + name);

  TabularDataset out;
  out.schema = d.schema;
  out.schema.push_back(ColumnSpec{name, "", ColumnKind::feature});
  out.group = d.group;
  out.group_name = d.group_name;
  const std::size_t p = d.n_cols();
  out.values.reserve(d.n_rows() * (p + 1));
  out.missing.reserve(d.n_rows() * (p + 1));
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      out.values.push_back(d.at(i, j));
      out.missing.push_back(d.is_missing(i, j) ? 1 : 0);
    }
    out.values.push_back(d.group[i] == from_group ? 1.0 : 0.0);
    out.missing.push_back(0);
  }
  return out;
}

}  // namespace qrfx
