#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "core/frame.hpp"
#include "core/util.hpp"
#include "core/weights.hpp"

namespace spatfuse {

struct GwrSettings {
  KernelKind kernel = KernelKind::bisquare;
  bool adaptive = true;
  double bandwidth = 0.0;  // 0 selects the bandwidth by AICc
};

struct GwrResult {
  KernelSpec kernel;
  std::vector<std::string> term_names;
  Eigen::MatrixXd local_beta;        // n x (p + 1)
  Eigen::MatrixXd local_std_errors;  // n x (p + 1)
  double effective_parameters = 0.0;  // trace of the hat matrix
  double trace_sts = 0.0;
  double sigma2 = 0.0;
  double log_likelihood = 0.0;
  double aic = 0.0;  // corrected AIC
  double adjusted_r2 = 0.0;
  Eigen::VectorXd residuals;
  bool bandwidth_selected = false;

  int n() const { return static_cast<int>(local_beta.rows()); }
  Eigen::VectorXd mean_beta() const;
  Eigen::VectorXd mean_std_error() const;
};

// Corrected AIC of a GWR fit at the given kernel; +infinity when the
// effective parameter count leaves no residual degrees of freedom or a
// local design is singular.
double gwr_aicc(const ModelFrame& frame, const KernelSpec& spec, int threads);

// Minimizes the corrected AIC over the bandwidth. Adaptive kernels search
// neighbor counts in [p + 2, n - 1]; fixed kernels search distances between
// the smallest positive and the largest centroid separation.
KernelSpec select_bandwidth(const ModelFrame& frame, KernelKind kind,
                            bool adaptive, int threads,
                            WarningLog* warnings = nullptr);

GwrResult fit_gwr(const ModelFrame& frame, const KernelSpec& spec,
                  int threads);

// Selects the bandwidth first when settings.bandwidth is zero.
GwrResult fit_gwr_auto(const ModelFrame& frame, const GwrSettings& settings,
                       int threads, WarningLog* warnings = nullptr);

// Local fit at an arbitrary location from the given frame; used for
// out-of-sample prediction. Adaptive bandwidths count neighbors among the
// frame's zones.
double gwr_predict_at(const ModelFrame& frame, const KernelSpec& spec,
                      const GeoPoint& location,
                      const Eigen::RowVectorXd& x_new);

}  // namespace spatfuse
