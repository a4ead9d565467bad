#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "core/estimators.hpp"
#include "core/frame.hpp"
#include "core/util.hpp"
#include "core/weights.hpp"

namespace spatfuse {

struct MoranResult {
  double i = 0.0;
  double expected = 0.0;  // -1 / (n - 1)
  double variance = 0.0;  // randomization assumption
  double z_score = 0.0;
  double p_normal = 0.0;
  double p_permutation = 0.0;  // NaN when permutations == 0
  int permutations = 0;
};

// Moran's I with analytic inference under the randomization assumption and
// an optional permutation test. The permutation p-value counts draws whose
// deviation from the expected value is at least as large as the observed
// one, with the +1 correction in numerator and denominator.
MoranResult morans_i(const Eigen::VectorXd& values, const WeightMatrix& w,
                     int permutations, std::uint64_t seed, int threads);

struct VifResult {
  std::vector<std::string> names;
  Eigen::VectorXd values;
};

// Variance inflation factors from auxiliary regressions of each predictor
// on the remaining predictors plus an intercept. Perfect collinearity
// yields +infinity.
VifResult vif(const ModelFrame& frame);

struct CvFold {
  int fold = 0;
  int test_size = 0;
  double train_mae = 0.0;
  double test_mae = 0.0;
};

struct CvResult {
  ModelKind model = ModelKind::ols;
  int folds = 0;
  double mean_train_mae = 0.0;
  double mean_test_mae = 0.0;
  std::vector<CvFold> fold_results;
  std::vector<int> assignments;  // fold index per frame row
};

// Seeded k-fold cross-validation on the model's transformed scale.
// Out-of-sample predictions use only the trend component for the global
// models; the spatially lagged models therefore share the coefficient
// prediction rule with plain least squares. GWR predicts from a local fit
// at the held-out zone's centroid and requires gwr_kernel. Spatial models
// refit on weights restricted to each training set.
CvResult kfold_cv(const ModelFrame& frame, const WeightMatrix& w,
                  ModelKind kind, int k_folds, std::uint64_t seed, int threads,
                  const KernelSpec* gwr_kernel = nullptr,
                  WarningLog* warnings = nullptr);

}  // namespace spatfuse
