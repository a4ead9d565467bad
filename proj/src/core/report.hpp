#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/diagnostics.hpp"
#include "core/estimators.hpp"
#include "core/fusion.hpp"
#include "core/gwr.hpp"
#include "core/transforms.hpp"

namespace spatfuse {

struct TermCell {
  std::string term;
  double estimate = 0.0;
  double std_error = 0.0;
  double p_value = 0.0;  // NaN when not testable (GWR means)
};

struct ModelReport {
  ModelKind kind = ModelKind::ols;
  std::vector<TermCell> coefficients;
  bool has_spatial_parameter = false;
  TermCell spatial_parameter;  // term holds "rho" or "lambda"
  bool is_gwr = false;
  KernelSpec gwr_kernel;
  double gwr_effective_parameters = 0.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double adjusted_r2 = 0.0;
  double sigma2 = 0.0;
  MoranResult moran;
  bool has_moran = false;
  double train_mae = 0.0;
  double test_mae = 0.0;
  bool has_cv = false;
};

struct ComparisonReport {
  std::string version;
  std::string config_hash;
  int n_zones = 0;
  bool weights_standardized = true;
  AssemblyReport assembly;
  BoxCoxSpec boxcox;
  StandardizationParams standardization;
  VifResult vif;
  double crosswalk_threshold = 0.0;
  int cv_folds = 0;
  int moran_permutations = 0;
  std::uint64_t cv_seed = 0;
  std::uint64_t moran_seed = 0;
  std::vector<ModelReport> models;  // ols, gwr, spatial_lag, spatial_error
  std::vector<std::string> warnings;
  std::vector<std::string> conventions;
};

// Star conventions: * p<=0.05, ** p<=0.01, *** p<=0.001.
std::string significance_stars(double p_value);

// The star column uses the permutation p-value when one was computed,
// otherwise the analytic normal p-value.
double moran_star_p(const MoranResult& moran);

std::string render_report_json(const ComparisonReport& report);
std::string render_report_text(const ComparisonReport& report);

std::string render_assembly_json(const AssemblyReport& report,
                                 const BoxCoxSpec& boxcox,
                                 const StandardizationParams& standardization);

std::string render_sweep_radius_csv(const SweepTable& table);
std::string render_sweep_radius_summary_json(const SweepTable& table);
std::string render_sweep_threshold_csv(const std::vector<ThresholdCount>& rows,
                                       double default_threshold);
std::string render_sweep_threshold_summary_json(
    const std::vector<ThresholdCount>& rows, double default_threshold);

}  // namespace spatfuse
