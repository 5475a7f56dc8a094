#pragma once

// Minimal CSV tables: a "# schema=<name>/<version>" line, one header row, then data rows.
// Numbers are written with 17 significant digits so they read back bit for bit.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "nsk/error.hpp"

namespace nsk {

inline constexpr std::string_view kDiagnosticsSchema = "nsk-diagnostics/1";
inline constexpr std::string_view kMapSchema = "nsk-map/1";
inline constexpr std::string_view kCheckSchema = "nsk-check/1";
inline constexpr std::string_view kConvergeSchema = "nsk-converge/1";
inline constexpr std::string_view kSweepSchema = "nsk-sweep/1";

inline std::string format_number(double v, int precision = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

struct CsvTable {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
      throw Error("csv: row has " + std::to_string(row.size()) + " cells, header has " + std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
  }

  void add_numeric_row(const std::vector<double>& row, int precision = 17) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row) cells.push_back(format_number(v, precision));
    add_row(std::move(cells));
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error("csv: no column '" + std::string(name) + "'");
  }

  double number(std::size_t row, std::size_t col) const {
    const auto& s = rows.at(row).at(col);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      // from_chars rejects "inf"/"nan" spellings from printf on some libraries
      if (s == "inf") return INFINITY;
      if (s == "-inf") return -INFINITY;
      if (s == "nan" || s == "-nan") return NAN;
      throw Error("csv: cell '" + s + "' is not a number");
    }
    return v;
  }

  std::vector<double> numeric_row(std::size_t row) const {
    std::vector<double> out(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) out[c] = number(row, c);
    return out;
  }

  std::string str() const {
    std::string out = "# schema=" + schema + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t start = 0;
  int line_no = 0;
  auto split = [](std::string_view s) {
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
      const auto p = s.find(',', b);
      out.emplace_back(s.substr(b, p == std::string_view::npos ? std::string_view::npos : p - b));
      if (p == std::string_view::npos) break;
      b = p + 1;
    }
    return out;
  };
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      constexpr std::string_view prefix = "# schema=";
      if (line.substr(0, prefix.size()) != prefix) throw Error("csv: missing schema line");
      t.schema = std::string(line.substr(prefix.size()));
      continue;
    }
    if (line.empty()) continue;
    if (line_no == 2) {
      t.columns = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw Error("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (line_no < 2) throw Error("csv: missing header");
  return t;
}

}  // namespace nsk
