#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "core/geo.hpp"

namespace spatfuse {

// Estimation-ready data: transformed target, standardized predictors, zone
// identifiers and centroids. The intercept is not stored as a column; the
// estimators add it.
struct ModelFrame {
  std::vector<std::string> zone_ids;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::vector<GeoPoint> centroids;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
};

// Enforces the frame invariants: matching sizes, finite values, unique
// column names, n >= p + 2.
void validate_frame(const ModelFrame& frame);

ModelFrame subset_rows(const ModelFrame& frame, const std::vector<int>& keep);

int column_index(const ModelFrame& frame, const std::string& name);

}  // namespace spatfuse
