#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/io.hpp"

namespace spatfuse {

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<ModelKind> kReportOrder = {
    ModelKind::ols, ModelKind::gwr, ModelKind::spatial_lag,
    ModelKind::spatial_error};

std::string with_stage(const std::string& stage, const std::string& msg) {
  if (msg.rfind("stage ", 0) == 0) return msg;  // already attributed
  return "stage " + stage + ": " + msg;
}

}  // namespace

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::validate: return "validate";
    case Stage::fuse: return "fuse";
    case Stage::weights: return "weights";
    case Stage::fit: return "fit";
    case Stage::diagnose: return "diagnose";
    case Stage::cv: return "cv";
    case Stage::sweep_radius: return "sweep-radius";
    case Stage::sweep_threshold: return "sweep-threshold";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "unknown";
}

Stage stage_from_name(const std::string& name) {
  if (name == "validate") return Stage::validate;
  if (name == "fuse") return Stage::fuse;
  if (name == "weights") return Stage::weights;
  if (name == "fit") return Stage::fit;
  if (name == "diagnose") return Stage::diagnose;
  if (name == "cv") return Stage::cv;
  if (name == "sweep-radius") return Stage::sweep_radius;
  if (name == "sweep-threshold") return Stage::sweep_threshold;
  if (name == "report") return Stage::report;
  if (name == "all") return Stage::all;
  throw ConfigError("unknown stage '" + name + "'");
}

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
  threads_ = resolve_threads(config_.threads);
}

void Pipeline::set_format(const std::string& format) {
  if (format != "text" && format != "json" && format != "both") {
    throw ConfigError("format must be text, json, or both; got '" + format +
                      "'");
  }
  format_ = format;
}

void Pipeline::ensure_fused() {
  if (assembled_) return;
  current_stage_ = "fuse";
  polygons_ = read_geojson_polygons(config_.polygons_path,
                                    config_.id_property);
  if (!config_.stations_path.empty()) {
    stations_ = points_only(read_points_csv(config_.stations_path));
  }

  bool any_non_zcta = false;
  for (const auto& t : config_.tables) {
    any_non_zcta = any_non_zcta || t.level != GeoLevel::zcta;
  }
  CrosswalkAssignment assignment;
  std::vector<std::string> unmatched;
  if (any_non_zcta) {
    if (!crosswalk_loaded_) {
      crosswalk_ = read_crosswalk_csv(config_.crosswalk_path);
      crosswalk_loaded_ = true;
    }
    assignment = crosswalk_assign(crosswalk_, config_.crosswalk_threshold);
    unmatched = assignment.unmatched;
  }

  std::vector<GeoTable> zcta_tables;
  for (const auto& ti : config_.tables) {
    GeoTable t = read_geo_table(ti.path, ti.level, ti.name,
                                ti.population_column);
    if (t.level == GeoLevel::zcta) {
      zcta_tables.push_back(std::move(t));
      continue;
    }
    std::map<std::string, double> population;
    for (int i = 0; i < t.rows(); ++i) {
      double pop = t.values(i, t.population_column);
      if (!std::isfinite(pop) || pop < 0.0) {
        warnings_.add("fuse: tract '" + t.ids[static_cast<std::size_t>(i)] +
                      "' in table '" + t.name +
                      "' has no usable population; weight set to zero");
        pop = 0.0;
      }
      population.emplace(t.ids[static_cast<std::size_t>(i)], pop);
    }
    AggregationResult agg =
        aggregate_to_zcta(t, assignment.assigned, population, &warnings_);
    for (const auto& u : agg.unmatched_tracts) unmatched.push_back(u);
    zcta_tables.push_back(std::move(agg.table));
  }

  frame_inputs_ = FrameInputs{zcta_tables,
                              config_.target,
                              config_.predictors,
                              *polygons_,
                              config_.boxcox_offset,
                              config_.station_column};

  std::vector<GeoTable> main_tables = zcta_tables;
  if (!config_.station_column.empty()) {
    main_tables.push_back(station_count_table(*polygons_, stations_,
                                              config_.station_radius,
                                              config_.station_column));
  }
  assembled_ = assemble_frame(main_tables, config_.target, config_.predictors,
                              *polygons_, config_.boxcox_offset, &warnings_);
  assembled_->report.threshold_used = config_.crosswalk_threshold;
  std::set<std::string> dedup(unmatched.begin(), unmatched.end());
  assembled_->report.unmatched_tracts.assign(dedup.begin(), dedup.end());
  write_assembly_artifact();
  completed_.push_back("fuse");
}

void Pipeline::ensure_weights() {
  if (weights_) return;
  ensure_fused();
  current_stage_ = "weights";
  std::map<std::string, const ZonePolygon*> poly_of;
  for (const auto& p : *polygons_) poly_of.emplace(p.zone_id, &p);
  std::vector<ZonePolygon> zone_polys;
  zone_polys.reserve(assembled_->frame.zone_ids.size());
  for (const auto& id : assembled_->frame.zone_ids) {
    zone_polys.push_back(*poly_of.at(id));
  }
  WeightMatrix binary = build_queen_contiguity(zone_polys);
  weights_ = config_.standardize_weights ? row_standardize(binary, &warnings_)
                                         : std::move(binary);
  assembled_->report.island_zones = weights_->island_ids();
  write_weights_csv(
      (std::filesystem::path(config_.output_dir) / "weights.csv").string(),
      *weights_);
  write_assembly_artifact();
  completed_.push_back("weights");
}

void Pipeline::ensure_fits() {
  if (ols_) return;
  ensure_weights();
  current_stage_ = "fit";
  const ModelFrame& frame = assembled_->frame;
  logdet_ = log_det_system(*weights_);
  ols_ = fit_ols(frame);
  slm_ = fit_spatial_lag(frame, *weights_, &warnings_, &*logdet_);
  sem_ = fit_spatial_error(frame, *weights_, &warnings_, &*logdet_);
  gwr_ = fit_gwr_auto(frame, config_.gwr, threads_, &warnings_);
  completed_.push_back("fit");
}

void Pipeline::ensure_diagnostics() {
  if (moran_) return;
  ensure_fits();
  current_stage_ = "diagnose";
  vif_ = vif(assembled_->frame);
  std::vector<MoranResult> results;
  const Eigen::VectorXd* residuals[] = {&ols_->residuals, &gwr_->residuals,
                                        &slm_->residuals, &sem_->residuals};
  for (std::size_t m = 0; m < kReportOrder.size(); ++m) {
    results.push_back(morans_i(*residuals[m], *weights_, config_.permutations,
                               derive_seed(config_.moran_seed, m), threads_));
  }
  moran_ = std::move(results);
  completed_.push_back("diagnose");
}

void Pipeline::ensure_cv() {
  if (cv_) return;
  ensure_fits();
  current_stage_ = "cv";
  std::vector<CvResult> results;
  for (ModelKind kind : kReportOrder) {
    const KernelSpec* kernel =
        kind == ModelKind::gwr ? &gwr_->kernel : nullptr;
    results.push_back(kfold_cv(assembled_->frame, *weights_, kind,
                               config_.cv_folds, config_.cv_seed, threads_,
                               kernel, &warnings_));
  }
  cv_ = std::move(results);
  completed_.push_back("cv");
}

void Pipeline::ensure_sweep_radius() {
  if (sweep_radius_) return;
  ensure_weights();
  current_stage_ = "sweep-radius";
  if (config_.station_column.empty()) {
    throw ConfigError(
        "sweep-radius requires station_column and stations in the config");
  }
  sweep_radius_ =
      radius_sweep(*frame_inputs_, stations_, config_.radii, kReportOrder,
                   *weights_, config_.gwr, threads_, &warnings_);
  std::filesystem::path out(config_.output_dir);
  write_text_file((out / "sweep_radius.csv").string(),
                  render_sweep_radius_csv(*sweep_radius_));
  write_text_file((out / "sweep_radius_summary.json").string(),
                  render_sweep_radius_summary_json(*sweep_radius_));
  completed_.push_back("sweep-radius");
}

void Pipeline::ensure_sweep_threshold() {
  if (sweep_threshold_) return;
  current_stage_ = "sweep-threshold";
  if (config_.crosswalk_path.empty()) {
    throw ConfigError("sweep-threshold requires a crosswalk in the config");
  }
  if (!crosswalk_loaded_) {
    crosswalk_ = read_crosswalk_csv(config_.crosswalk_path);
    crosswalk_loaded_ = true;
  }
  if (crosswalk_.empty()) {
    throw DataError("sweep-threshold: crosswalk has no rows");
  }
  sweep_threshold_ = threshold_sensitivity(crosswalk_, config_.thresholds);
  std::filesystem::path out(config_.output_dir);
  write_text_file((out / "sweep_threshold.csv").string(),
                  render_sweep_threshold_csv(*sweep_threshold_,
                                             config_.crosswalk_threshold));
  write_text_file(
      (out / "sweep_threshold_summary.json").string(),
      render_sweep_threshold_summary_json(*sweep_threshold_,
                                          config_.crosswalk_threshold));
  completed_.push_back("sweep-threshold");
}

const AssembledFrame& Pipeline::fused() {
  ensure_fused();
  return *assembled_;
}

const FrameInputs& Pipeline::frame_inputs() {
  ensure_fused();
  return *frame_inputs_;
}

const std::vector<ZonePolygon>& Pipeline::polygons() {
  ensure_fused();
  return *polygons_;
}

const std::vector<GeoPoint>& Pipeline::stations() {
  ensure_fused();
  return stations_;
}

const std::vector<CrosswalkRow>& Pipeline::crosswalk() {
  ensure_fused();
  return crosswalk_;
}

const WeightMatrix& Pipeline::weights() {
  ensure_weights();
  return *weights_;
}

const LogDetSystem& Pipeline::logdet() {
  ensure_fits();
  return *logdet_;
}

const FitResult& Pipeline::ols_fit() {
  ensure_fits();
  return *ols_;
}

const FitResult& Pipeline::slm_fit() {
  ensure_fits();
  return *slm_;
}

const FitResult& Pipeline::sem_fit() {
  ensure_fits();
  return *sem_;
}

const GwrResult& Pipeline::gwr_fit() {
  ensure_fits();
  return *gwr_;
}

const VifResult& Pipeline::vif_result() {
  ensure_diagnostics();
  return *vif_;
}

const std::vector<MoranResult>& Pipeline::moran_results() {
  ensure_diagnostics();
  return *moran_;
}

const std::vector<CvResult>& Pipeline::cv_results() {
  ensure_cv();
  return *cv_;
}

const SweepTable& Pipeline::sweep_radius_table() {
  ensure_sweep_radius();
  return *sweep_radius_;
}

const std::vector<ThresholdCount>& Pipeline::sweep_threshold_table() {
  ensure_sweep_threshold();
  return *sweep_threshold_;
}

namespace {

ModelReport global_model_report(const FitResult& fit, int n) {
  ModelReport m;
  m.kind = fit.model_kind;
  bool ols = fit.model_kind == ModelKind::ols;
  double df = n - static_cast<double>(fit.beta.size());
  for (int t = 0; t < fit.beta.size(); ++t) {
    TermCell cell;
    cell.term = fit.term_names[static_cast<std::size_t>(t)];
    cell.estimate = fit.beta(t);
    cell.std_error = fit.std_errors(t);
    double stat = fit.beta(t) / fit.std_errors(t);
    cell.p_value =
        ols ? two_sided_t_p(stat, df) : two_sided_normal_p(stat);
    m.coefficients.push_back(cell);
  }
  if (!ols) {
    m.has_spatial_parameter = true;
    m.spatial_parameter.term =
        fit.model_kind == ModelKind::spatial_lag ? "rho" : "lambda";
    m.spatial_parameter.estimate = fit.rho;
    m.spatial_parameter.std_error = fit.rho_std_error;
    m.spatial_parameter.p_value =
        two_sided_normal_p(fit.rho / fit.rho_std_error);
  }
  m.log_likelihood = fit.log_likelihood;
  m.aic = fit.aic;
  m.adjusted_r2 = fit.adjusted_r2;
  m.sigma2 = fit.sigma2;
  return m;
}

ModelReport gwr_model_report(const GwrResult& fit) {
  ModelReport m;
  m.kind = ModelKind::gwr;
  m.is_gwr = true;
  m.gwr_kernel = fit.kernel;
  m.gwr_effective_parameters = fit.effective_parameters;
  Eigen::VectorXd mean_beta = fit.mean_beta();
  Eigen::VectorXd mean_se = fit.mean_std_error();
  for (int t = 0; t < mean_beta.size(); ++t) {
    TermCell cell;
    cell.term = fit.term_names[static_cast<std::size_t>(t)];
    cell.estimate = mean_beta(t);
    cell.std_error = mean_se(t);
    cell.p_value = std::numeric_limits<double>::quiet_NaN();
    m.coefficients.push_back(cell);
  }
  m.log_likelihood = fit.log_likelihood;
  m.aic = fit.aic;
  m.adjusted_r2 = fit.adjusted_r2;
  m.sigma2 = fit.sigma2;
  return m;
}

}  // namespace

ComparisonReport Pipeline::build_report() {
  ensure_diagnostics();
  ensure_cv();
  current_stage_ = "report";

  ComparisonReport report;
  report.version = kVersion;
  report.config_hash = hex64(config_.config_hash);
  report.n_zones = assembled_->frame.n();
  report.weights_standardized = weights_->standardized;
  report.assembly = assembled_->report;
  report.boxcox = assembled_->boxcox;
  report.standardization = assembled_->standardization;
  report.vif = *vif_;
  report.crosswalk_threshold = config_.crosswalk_threshold;
  report.cv_folds = config_.cv_folds;
  report.moran_permutations = config_.permutations;
  report.cv_seed = config_.cv_seed;
  report.moran_seed = config_.moran_seed;

  for (std::size_t m = 0; m < kReportOrder.size(); ++m) {
    ModelKind kind = kReportOrder[m];
    ModelReport mr;
    switch (kind) {
      case ModelKind::ols:
        mr = global_model_report(*ols_, report.n_zones);
        break;
      case ModelKind::gwr:
        mr = gwr_model_report(*gwr_);
        break;
      case ModelKind::spatial_lag:
        mr = global_model_report(*slm_, report.n_zones);
        break;
      case ModelKind::spatial_error:
        mr = global_model_report(*sem_, report.n_zones);
        break;
    }
    mr.moran = (*moran_)[m];
    mr.has_moran = true;
    mr.train_mae = (*cv_)[m].mean_train_mae;
    mr.test_mae = (*cv_)[m].mean_test_mae;
    mr.has_cv = true;
    report.models.push_back(std::move(mr));
  }

  report.warnings = warnings_.messages();
  report.conventions = {
      "aic parameter count includes the error variance and, when present, "
      "the spatial parameter",
      "spatial error model residuals are reported on the response scale "
      "(observed minus trend)",
      "cross-validation predicts held-out zones from the trend component "
      "only; gwr predicts from a local fit at the held-out centroid",
      "crosswalk ties resolve to the lexicographically smallest zcta id",
      "adaptive gwr bandwidths count neighbors with the focal zone included",
  };
  return report;
}

void Pipeline::write_assembly_artifact() {
  write_text_file((std::filesystem::path(config_.output_dir) /
                   "assembly_report.json")
                      .string(),
                  render_assembly_json(assembled_->report, assembled_->boxcox,
                                       assembled_->standardization));
}

void Pipeline::write_report_artifacts() {
  ComparisonReport report = build_report();
  std::filesystem::path out(config_.output_dir);
  if (format_ == "json" || format_ == "both") {
    write_text_file((out / "report.json").string(),
                    render_report_json(report));
  }
  if (format_ == "text" || format_ == "both") {
    write_text_file((out / "report.txt").string(),
                    render_report_text(report));
  }
  write_assembly_artifact();
  completed_.push_back("report");
}

void Pipeline::write_status(const std::string& status,
                            const std::string& error) {
  nlohmann::ordered_json j;
  j["status"] = status;
  j["stage"] = current_stage_;
  j["stages_completed"] = completed_;
  if (!error.empty()) {
    j["error"] = error;
    j["stale_outputs"] = true;
  }
  write_text_file(
      (std::filesystem::path(config_.output_dir) / "run_status.json").string(),
      j.dump(2) + "\n");
}

void Pipeline::execute(Stage stage) {
  current_stage_ = stage_name(stage);
  write_status("running", "");
  try {
    switch (stage) {
      case Stage::validate:
        validate_config(config_);
        break;
      case Stage::fuse:
        ensure_fused();
        break;
      case Stage::weights:
        ensure_weights();
        break;
      case Stage::fit:
        ensure_fits();
        break;
      case Stage::diagnose:
        ensure_diagnostics();
        break;
      case Stage::cv:
        ensure_cv();
        break;
      case Stage::sweep_radius:
        ensure_sweep_radius();
        break;
      case Stage::sweep_threshold:
        ensure_sweep_threshold();
        break;
      case Stage::report:
        write_report_artifacts();
        break;
      case Stage::all:
        if (!config_.station_column.empty()) {
          ensure_sweep_radius();
        } else {
          warnings_.add("all: sweep-radius skipped; no station column "
                        "configured");
        }
        if (!config_.crosswalk_path.empty()) {
          ensure_sweep_threshold();
        } else {
          warnings_.add("all: sweep-threshold skipped; no crosswalk "
                        "configured");
        }
        write_report_artifacts();
        break;
    }
  } catch (ConfigError& e) {
    write_status("failed", e.what());
    throw ConfigError(with_stage(current_stage_, e.what()));
  } catch (DataError& e) {
    write_status("failed", e.what());
    throw DataError(with_stage(current_stage_, e.what()));
  } catch (NumericError& e) {
    write_status("failed", e.what());
    throw NumericError(with_stage(current_stage_, e.what()));
  } catch (std::exception& e) {
    write_status("failed", e.what());
    throw;
  }
  write_status("ok", "");
}

}  // namespace spatfuse
