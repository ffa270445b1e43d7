#include "qrfx/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrfx/error.hpp"

namespace qrfx {
namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) {
    throw ParseError("unterminated quote on line " + std::to_string(lineno));
  }
  out.push_back(field);
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      table.header = split_line(line, lineno);
    } else {
      if (line.empty()) continue;
      auto row = split_line(line, lineno);
      if (row.size() != table.header.size()) {
        throw ParseError("line " + std::to_string(lineno) + ": expected " +
                         std::to_string(table.header.size()) + " fields, got " +
                         std::to_string(row.size()));
      }
      table.rows.push_back(std::move(row));
    }
  }
  if (table.header.empty()) throw ParseError("empty CSV: " + path);
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      const std::string& f = fields[i];
      if (f.find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char c : f) {
          if (c == '"') out << "\"\"";
          else out << c;
        }
        out << '"';
      } else {
        out << f;
      }
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace qrfx
