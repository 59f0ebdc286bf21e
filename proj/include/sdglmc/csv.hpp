#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sdglmc {

/// Numeric CSV with a header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<size_t> find_column(const std::string& name) const;
  size_t column_index(const std::string& name) const;  // throws Io if absent
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

}  // namespace sdglmc
