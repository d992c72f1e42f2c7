#pragma once

#include <string>
#include <vector>

#include "kgd/core.hpp"

namespace kgd::io {

/// Shortest decimal form that round-trips the double ("%.17g").
std::string format_double(double v);

/// Small string table written as CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string to_csv() const;
};

/// One particle per row, d comma-separated columns, optional leading `#` lines.
void write_particles(const std::string& path, const EmpiricalMeasure& q, const std::vector<std::string>& metadata = {});
EmpiricalMeasure read_particles(const std::string& path);

void write_text(const std::string& path, const std::string& text);

}  // namespace kgd::io
