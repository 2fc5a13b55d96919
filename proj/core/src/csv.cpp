// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradperm/errors.hpp"

namespace gradperm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string cell = trim(raw);
  if (cell.empty())
    throw ConfigError("missing value at row " + std::to_string(row) +
                      ", column '" + column + "'");
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("non-numeric cell '" + cell + "' at row " +
                      std::to_string(row) + ", column '" + column + "'");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

Dataset read_dataset_csv(const std::string& path,
                         const std::string& outcome_column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("CSV file is empty (header row required): " + path);
  if (!line.empty() && line.front() == '\xEF' && line.size() >= 3 &&
      line[1] == '\xBB' && line[2] == '\xBF')
    line.erase(0, 3);  // strip UTF-8 BOM

  std::vector<std::string> header = split_line(line);
  for (auto& name : header) name = trim(name);
  if (header.empty()) throw ConfigError("CSV header row has no columns");

  int outcome_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty())
      throw ConfigError("CSV header has an empty column name (column " +
                        std::to_string(c + 1) + ")");
    if (header[c] == outcome_column) outcome_col = static_cast<int>(c);
  }
  if (outcome_col < 0)
    throw ConfigError("outcome column '" + outcome_column +
                      "' not found in CSV header");
  if (header.size() < 2)
    throw ConfigError("CSV needs at least one feature column besides '" +
                      outcome_column + "'");

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ConfigError("row " + std::to_string(row_number) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      parsed[c] = parse_cell(cells[c], row_number, header[c]);
    rows.push_back(std::move(parsed));
  }
  if (rows.size() < 2)
    throw ConfigError("CSV needs at least 2 data rows, got " +
                      std::to_string(rows.size()));

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 1;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (std::size_t c = 0; c < header.size(); ++c)
    if (static_cast<int>(c) != outcome_col) names.push_back(header[c]);

  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index feature = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (static_cast<int>(c) == outcome_col)
        y(i) = rows[static_cast<std::size_t>(i)][c];
      else
        X(i, feature++) = rows[static_cast<std::size_t>(i)][c];
    }
  }

  return make_dataset(std::move(X), std::move(y), std::move(names));
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& outcome_column) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open CSV file for writing: " + path);

  for (const auto& name : data.feature_names) out << name << ',';
  out << outcome_column << '\n';
  for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < data.n_features(); ++j)
      out << format_double(data.X(i, j)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

}  // namespace gradperm
