#include "mixflow/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixflow/errors.hpp"

namespace mixflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row,
                  const std::string& column) {
  if (cell.empty()) {
    throw DataFormatError("missing value at row " + std::to_string(row) +
                          ", column " + column);
  }
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(v)) {
    throw DataFormatError("non-numeric cell '" + cell + "' at row " +
                          std::to_string(row) + ", column " + column);
  }
  return v;
}

// Population mean/sd of one column; sd == 0 flags a constant column.
std::pair<double, double> column_stats(const Eigen::VectorXd& col) {
  double mean = col.mean();
  double var = (col.array() - mean).square().mean();
  return {mean, std::sqrt(var)};
}

}  // namespace

Dataset load_dataset(const std::string& path,
                     const std::string& response_column, Standardize mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw DataFormatError("dataset file is empty: " + path);
  }
  std::vector<std::string> header = split_csv_line(line);
  std::ptrdiff_t response_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == response_column) {
      response_idx = static_cast<std::ptrdiff_t>(i);
      break;
    }
  }
  if (response_idx < 0) {
    throw DataFormatError("response column '" + response_column +
                          "' not found in header of " + path);
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;  // header is row 0
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      ++row_no;
      continue;
    }
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataFormatError(
          "row " + std::to_string(row_no) + " has " +
          std::to_string(cells.size()) + " cells, header has " +
          std::to_string(header.size()) + " in " + path);
    }
    std::vector<double> vals(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      vals[i] = parse_cell(cells[i], row_no, header[i]);
    }
    rows.push_back(std::move(vals));
    ++row_no;
  }
  if (rows.empty()) {
    throw DataFormatError("dataset has no data rows: " + path);
  }

  Dataset data;
  auto n = static_cast<Eigen::Index>(rows.size());
  auto p = static_cast<Eigen::Index>(header.size()) - 1;
  data.features.resize(n, p);
  data.responses.resize(n);
  data.response_name = response_column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<std::ptrdiff_t>(i) != response_idx) {
      data.feature_names.push_back(header[i]);
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index fc = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      double v = rows[static_cast<std::size_t>(r)][c];
      if (static_cast<std::ptrdiff_t>(c) == response_idx) {
        data.responses[r] = v;
      } else {
        data.features(r, fc++) = v;
      }
    }
  }
  data.feature_means = Eigen::VectorXd::Zero(p);
  data.feature_scales = Eigen::VectorXd::Ones(p);

  standardize(data, mode);
  return data;
}

void standardize(Dataset& data, Standardize mode) {
  if (mode == Standardize::kNone) return;
  if (data.feature_means.size() != data.features.cols()) {
    data.feature_means = Eigen::VectorXd::Zero(data.features.cols());
    data.feature_scales = Eigen::VectorXd::Ones(data.features.cols());
  }

  for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
    auto [mean, sd] = column_stats(data.features.col(c));
    if (sd == 0.0) {
      throw DataFormatError("cannot standardize constant column '" +
                            data.feature_names[static_cast<std::size_t>(c)] +
                            "'");
    }
    data.features.col(c) = (data.features.col(c).array() - mean) / sd;
    // Compose with any prior standardization so provenance maps raw -> final.
    data.feature_means[c] += mean * data.feature_scales[c];
    data.feature_scales[c] *= sd;
  }

  if (mode == Standardize::kFeaturesAndResponse) {
    auto [mean, sd] = column_stats(data.responses);
    if (sd == 0.0) {
      throw DataFormatError("cannot standardize constant response column '" +
                            data.response_name + "'");
    }
    data.responses = (data.responses.array() - mean) / sd;
    data.response_mean += mean * data.response_scale;
    data.response_scale *= sd;
  }
}

}  // namespace mixflow
