#pragma once

#include <string>
#include <vector>

namespace qrfx {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// UTF-8, comma-separated, first row is the header. Double-quote quoting
// with "" escapes. Row order preserved.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const CsvTable& table);

// Fixed float formatting for deterministic artifacts.
std::string format_number(double v);

}  // namespace qrfx
