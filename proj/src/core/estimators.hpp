#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "core/frame.hpp"
#include "core/util.hpp"
#include "core/weights.hpp"

namespace spatfuse {

enum class ModelKind { ols, spatial_lag, spatial_error, gwr };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct FitResult {
  ModelKind model_kind = ModelKind::ols;
  std::vector<std::string> term_names;  // "(Intercept)" then predictors
  Eigen::VectorXd beta;
  Eigen::VectorXd std_errors;
  // Spatial autoregressive parameter (rho for the lag model, the error
  // parameter for the error model); NaN for OLS.
  double rho = std::numeric_limits<double>::quiet_NaN();
  double rho_std_error = std::numeric_limits<double>::quiet_NaN();
  double sigma2 = 0.0;  // ML variance estimate
  double log_likelihood = 0.0;
  double aic = 0.0;
  double adjusted_r2 = 0.0;
  Eigen::VectorXd residuals;
  bool converged = true;
  // Parameters counted in AIC: coefficients, the error variance, and the
  // spatial parameter when present.
  int param_count = 0;
};

// Reusable log-determinant evaluator built from the eigenvalues of W. For
// a row-standardized W derived from a symmetric binary matrix the spectrum
// is computed on the similar symmetric matrix D^{-1/2} C D^{-1/2}.
struct LogDetSystem {
  Eigen::VectorXd eigenvalues;
  double rho_lo = -1.0;  // open-interval bounds for the spatial parameter
  double rho_hi = 1.0;

  double operator()(double rho) const;
};

LogDetSystem log_det_system(const WeightMatrix& w);

FitResult fit_ols(const ModelFrame& frame);

// Concentrated log-likelihood profile for the spatial lag model,
// parameterized by rho. Cheap per-evaluation via the residual identity
// e(rho) = e0 - rho*eL.
class SlmProfile {
 public:
  SlmProfile(const ModelFrame& frame, const WeightMatrix& w,
             const LogDetSystem& logdet);
  double operator()(double rho) const;
  double sse(double rho) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  int n_;
  double e00_, e0l_, ell_;
  double lo_, hi_;
  LogDetSystem logdet_;
};

// Concentrated log-likelihood profile for the spatial error model; each
// evaluation runs the filtered regression at that parameter value.
class SemProfile {
 public:
  SemProfile(const ModelFrame& frame, const WeightMatrix& w,
             const LogDetSystem& logdet);
  double operator()(double lambda) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  Eigen::VectorXd beta_at(double lambda) const;
  double sse_at(double lambda) const;

 private:
  int n_;
  Eigen::VectorXd y_, wy_;
  Eigen::MatrixXd z_, wz_;
  double lo_, hi_;
  LogDetSystem logdet_;
};

FitResult fit_spatial_lag(const ModelFrame& frame, const WeightMatrix& w,
                          WarningLog* warnings = nullptr,
                          const LogDetSystem* precomputed = nullptr);

FitResult fit_spatial_error(const ModelFrame& frame, const WeightMatrix& w,
                            WarningLog* warnings = nullptr,
                            const LogDetSystem* precomputed = nullptr);

// Trend-only prediction beta0 + x_new * beta, the held-out prediction rule
// for every model kind.
Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& x_new);

}  // namespace spatfuse
