#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "core/util.hpp"

namespace spatfuse {

struct BoxCoxSpec {
  double lambda = 1.0;
  double offset = 0.0;  // added before transforming
};

// ((y + offset)^lambda - 1)/lambda, or ln(y + offset) at lambda = 0.
// Rejects any nonpositive shifted value, naming the offending index.
std::vector<double> boxcox(const std::vector<double>& y,
                           const BoxCoxSpec& spec);
Eigen::VectorXd boxcox(const Eigen::VectorXd& y, const BoxCoxSpec& spec);

// Profile-likelihood lambda estimate on [-2, 2], golden-section to 1e-6.
// Boundary estimates raise a warning.
double boxcox_mle(const std::vector<double>& y, double offset,
                  WarningLog* warnings = nullptr);
double boxcox_mle(const Eigen::VectorXd& y, double offset,
                  WarningLog* warnings = nullptr);

// Per-column sample mean and standard deviation (divisor n - 1).
struct StandardizationParams {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;
};

// Columnwise z-scores. Rejects constant columns, naming the column.
std::pair<Eigen::MatrixXd, StandardizationParams> zscore(
    const Eigen::MatrixXd& x, const std::vector<std::string>& names);

Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& x,
                              const StandardizationParams& params);

}  // namespace spatfuse
