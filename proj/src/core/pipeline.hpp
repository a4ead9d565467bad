#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/diagnostics.hpp"
#include "core/estimators.hpp"
#include "core/fusion.hpp"
#include "core/gwr.hpp"
#include "core/report.hpp"
#include "core/weights.hpp"

namespace spatfuse {

enum class Stage {
  validate,
  fuse,
  weights,
  fit,
  diagnose,
  cv,
  sweep_radius,
  sweep_threshold,
  report,
  all,
};

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

// Runs the workflow fuse -> weights -> fit -> diagnose -> cv -> report with
// optional sweeps, memoizing each stage in memory and writing artifacts
// into the configured output directory. run_status.json tracks progress so
// partially written outputs can be recognized as stale after a failure.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void set_format(const std::string& format);  // text | json | both

  const RunConfig& config() const { return config_; }
  const WarningLog& warnings() const { return warnings_; }

  const AssembledFrame& fused();
  const FrameInputs& frame_inputs();
  const std::vector<ZonePolygon>& polygons();
  const std::vector<GeoPoint>& stations();
  const std::vector<CrosswalkRow>& crosswalk();
  const WeightMatrix& weights();
  const LogDetSystem& logdet();

  const FitResult& ols_fit();
  const FitResult& slm_fit();
  const FitResult& sem_fit();
  const GwrResult& gwr_fit();

  const VifResult& vif_result();
  // Indexed like the report: ols, gwr, spatial_lag, spatial_error.
  const std::vector<MoranResult>& moran_results();
  const std::vector<CvResult>& cv_results();

  const SweepTable& sweep_radius_table();
  const std::vector<ThresholdCount>& sweep_threshold_table();

  ComparisonReport build_report();

  // Runs the stage (with prerequisites), writes its artifacts, and keeps
  // run_status.json current. Exceptions carry the failing stage's name.
  void execute(Stage stage);

 private:
  void ensure_fused();
  void ensure_weights();
  void ensure_fits();
  void ensure_diagnostics();
  void ensure_cv();
  void ensure_sweep_radius();
  void ensure_sweep_threshold();

  void write_assembly_artifact();
  void write_report_artifacts();
  void write_status(const std::string& status, const std::string& error);

  RunConfig config_;
  int threads_ = 1;
  std::string format_ = "both";
  WarningLog warnings_;
  std::string current_stage_ = "validate";
  std::vector<std::string> completed_;

  std::optional<std::vector<ZonePolygon>> polygons_;
  std::vector<GeoPoint> stations_;
  std::vector<CrosswalkRow> crosswalk_;
  bool crosswalk_loaded_ = false;
  std::optional<FrameInputs> frame_inputs_;
  std::optional<AssembledFrame> assembled_;
  std::optional<WeightMatrix> weights_;
  std::optional<LogDetSystem> logdet_;
  std::optional<FitResult> ols_;
  std::optional<FitResult> slm_;
  std::optional<FitResult> sem_;
  std::optional<GwrResult> gwr_;
  std::optional<VifResult> vif_;
  std::optional<std::vector<MoranResult>> moran_;
  std::optional<std::vector<CvResult>> cv_;
  std::optional<SweepTable> sweep_radius_;
  std::optional<std::vector<ThresholdCount>> sweep_threshold_;
};

}  // namespace spatfuse
