#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace mixflow {

enum class Standardize { kNone, kFeatures, kFeaturesAndResponse };

// Tabular regression data: J rows, p feature columns plus one response.
struct Dataset {
  Eigen::MatrixXd features;               // J x p
  Eigen::VectorXd responses;              // J
  std::vector<std::string> feature_names;
  std::string response_name;

  // Per-column location/scale applied by standardize() (identity when none).
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_scales;
  double response_mean = 0.0;
  double response_scale = 1.0;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
};

// Reads a CSV file with a header row. The response column is selected by
// name; every other column becomes a feature. Throws DataFormatError on
// malformed input (missing header, ragged rows, non-numeric or missing
// cells, unknown response column) and IoError when the file cannot be read.
Dataset load_dataset(const std::string& path, const std::string& response_column,
                     Standardize mode = Standardize::kNone);

// In-place z-scoring with the population (divide-by-J) standard deviation,
// which makes the operation idempotent. A constant column cannot be
// standardized and raises DataFormatError naming it. The applied
// location/scale are recorded in the dataset.
void standardize(Dataset& data, Standardize mode);

}  // namespace mixflow
