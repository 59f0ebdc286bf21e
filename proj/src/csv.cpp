#include "sdglmc/csv.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdglmc/error.hpp"

namespace sdglmc {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

std::optional<size_t> CsvTable::find_column(const std::string& name) const {
  for (size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  return std::nullopt;
}

size_t CsvTable::column_index(const std::string& name) const {
  auto k = find_column(name);
  if (!k) fail(ErrorCode::Io, "missing CSV column '" + name + "'");
  return *k;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Io, path + ": empty file");
  t.header = split(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " fields");
    std::vector<double> row(cells.size());
    for (size_t k = 0; k < cells.size(); ++k) {
      char* end = nullptr;
      row[k] = std::strtod(cells[k].c_str(), &end);
      if (end == cells[k].c_str() || *end != '\0')
        fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": non-numeric field '" +
                                cells[k] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != values.cols())
    fail(ErrorCode::DimensionMismatch, "CSV header width differs from matrix columns");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  for (size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values(r, c);
    out << '\n';
  }
}

}  // namespace sdglmc
