#include "kgd/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kgd::io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void Table::add_row(std::vector<std::string> row) {
  require(row.size() == columns.size(), "table row has " + std::to_string(row.size()) + " cells, expected " +
                                            std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::ostringstream out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out.str();
}

void write_particles(const std::string& path, const EmpiricalMeasure& q, const std::vector<std::string>& metadata) {
  std::ostringstream out;
  for (const auto& m : metadata) out << "# " << m << '\n';
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto x = q.atom(i);
    for (Eigen::Index a = 0; a < x.size(); ++a) out << (a ? "," : "") << format_double(x(a));
    out << '\n';
  }
  write_text(path, out.str());
}

EmpiricalMeasure read_particles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open particle file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool body = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (body) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": '#' lines must precede the data");
      continue;
    }
    body = true;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw InvalidArgument("particle file '" + path + "' has no particles");
  Matrix atoms(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t a = 0; a < rows[j].size(); ++a)
      atoms(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = rows[j][a];
  return EmpiricalMeasure(std::move(atoms));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

}  // namespace kgd::io
