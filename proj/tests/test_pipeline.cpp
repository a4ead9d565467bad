#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/config.hpp"
#include "core/errors.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"
#include "core/report.hpp"
#include "core/util.hpp"

#include "support/fixtures.hpp"

using namespace spatfuse;

namespace {

using ordered_json = nlohmann::ordered_json;

bool has_warning(const std::vector<std::string>& messages,
                 const std::string& needle) {
  for (const auto& m : messages) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

ordered_json read_json_file(const std::filesystem::path& path) {
  return ordered_json::parse(read_text_file(path.string()));
}

const std::vector<std::string> kAllArtifacts = {
    "assembly_report.json",
    "weights.csv",
    "sweep_radius.csv",
    "sweep_radius_summary.json",
    "sweep_threshold.csv",
    "sweep_threshold_summary.json",
    "report.json",
    "report.txt",
    "run_status.json",
};

const std::vector<ModelKind> kOrder = {ModelKind::ols, ModelKind::gwr,
                                       ModelKind::spatial_lag,
                                       ModelKind::spatial_error};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// A dataset with a single zcta-level table: no crosswalk, no stations.
std::string write_zcta_only_dataset(const std::filesystem::path& dir) {
  const int rows = 4, cols = 5;
  const double cell = 0.1, lon0 = -76.0, lat0 = 40.0;
  std::vector<std::string> ids;
  ordered_json features = ordered_json::array();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "1%04d", r * cols + c + 1);
      ids.emplace_back(buf);
      double x0 = lon0 + c * cell, x1 = lon0 + (c + 1) * cell;
      double y0 = lat0 + r * cell, y1 = lat0 + (r + 1) * cell;
      ordered_json ring = ordered_json::array(
          {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
      features.push_back(
          {{"type", "Feature"},
           {"properties", {{"id", ids.back()}}},
           {"geometry",
            {{"type", "Polygon"},
             {"coordinates", ordered_json::array({ring})}}}});
    }
  }
  ordered_json fc = {{"type", "FeatureCollection"}, {"features", features}};
  write_text_file((dir / "zones.geojson").string(), fc.dump(2) + "\n");

  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::string csv = "zcta_id,ev_count,income,educ\n";
  for (int z = 0; z < rows * cols; ++z) {
    double income = 48000.0 + 2500.0 * (z % cols) + 8000.0 * unif(rng);
    double educ = 18.0 + 1.5 * (z / cols) + 12.0 * unif(rng);
    long ev = std::lround(20.0 + 0.002 * (income - 48000.0) + 1.5 * educ +
                          25.0 * unif(rng));
    csv += ids[static_cast<std::size_t>(z)] + "," + std::to_string(ev) + "," +
           fmt2(income) + "," + fmt2(educ) + "\n";
  }
  write_text_file((dir / "attrs.csv").string(), csv);

  ordered_json cfg = {
      {"polygons", "zones.geojson"},
      {"tables",
       ordered_json::array({{{"path", "attrs.csv"}, {"level", "zcta"}}})},
      {"target", "ev_count"},
      {"predictors", ordered_json::array({"income", "educ"})},
      {"cv", {{"folds", 4}, {"seed", 7}}},
      {"moran", {{"permutations", 49}, {"seed", 9}}},
      {"output_dir", "out"},
  };
  write_text_file((dir / "config.json").string(), cfg.dump(2) + "\n");
  return (dir / "config.json").string();
}

}  // namespace

TEST_CASE("stage names round trip and unknown stages are rejected") {
  const std::vector<Stage> stages = {
      Stage::validate,    Stage::fuse,   Stage::weights,
      Stage::fit,         Stage::diagnose, Stage::cv,
      Stage::sweep_radius, Stage::sweep_threshold, Stage::report,
      Stage::all};
  for (Stage s : stages) {
    CHECK(stage_from_name(stage_name(s)) == s);
  }
  CHECK(stage_name(Stage::sweep_radius) == "sweep-radius");
  CHECK(stage_name(Stage::sweep_threshold) == "sweep-threshold");
  CHECK_THROWS_WITH_AS(stage_from_name("frobnicate"),
                       doctest::Contains("unknown stage 'frobnicate'"),
                       ConfigError);
}

TEST_CASE("the output format must be text, json, or both") {
  Pipeline p{RunConfig{}};
  p.set_format("text");
  p.set_format("json");
  p.set_format("both");
  CHECK_THROWS_WITH_AS(p.set_format("csv"),
                       doctest::Contains("format must be text, json, or both"),
                       ConfigError);
}

TEST_CASE("significance stars and the moran star p-value follow conventions") {
  CHECK(significance_stars(0.0002) == "***");
  CHECK(significance_stars(0.001) == "***");
  CHECK(significance_stars(0.005) == "**");
  CHECK(significance_stars(0.01) == "**");
  CHECK(significance_stars(0.03) == "*");
  CHECK(significance_stars(0.05) == "*");
  CHECK(significance_stars(0.2) == "");
  CHECK(significance_stars(std::numeric_limits<double>::quiet_NaN()) == "");

  MoranResult m;
  m.p_normal = 0.4;
  m.p_permutation = std::numeric_limits<double>::quiet_NaN();
  m.permutations = 0;
  CHECK(moran_star_p(m) == 0.4);
  m.permutations = 199;
  m.p_permutation = 0.02;
  CHECK(moran_star_p(m) == 0.02);
}

TEST_CASE("the all stage produces every artifact and a coherent report") {
  testsupport::TempDir tmp;
  RunConfig cfg = load_config(testsupport::write_synthetic_dataset(tmp.path()));
  Pipeline p(cfg);
  p.execute(Stage::all);

  std::filesystem::path out(cfg.output_dir);
  for (const auto& name : kAllArtifacts) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(out / name));
  }

  ordered_json status = read_json_file(out / "run_status.json");
  CHECK(status["status"] == "ok");
  CHECK(status["stage"] == "report");
  CHECK_FALSE(status.contains("error"));
  CHECK(status["stages_completed"] ==
        ordered_json::array({"fuse", "weights", "sweep-radius",
                             "sweep-threshold", "fit", "diagnose", "cv",
                             "report"}));

  CHECK(p.polygons().size() == 50);
  CHECK(p.stations().size() == 70);
  CHECK_FALSE(p.crosswalk().empty());

  const AssembledFrame& fused = p.fused();
  CHECK(fused.frame.n() == 49);
  CHECK(fused.report.rows_in == 50);
  CHECK(fused.report.rows_dropped_missing == 1);
  CHECK(fused.report.rows_out == 49);
  CHECK(fused.report.threshold_used == doctest::Approx(0.2));
  CHECK(fused.report.unmatched_tracts ==
        std::vector<std::string>{"T88888", "T99991", "T99992"});
  CHECK(fused.report.island_zones.empty());
  CHECK(std::is_sorted(fused.frame.zone_ids.begin(),
                       fused.frame.zone_ids.end()));
  CHECK(std::find(fused.frame.zone_ids.begin(), fused.frame.zone_ids.end(),
                  "90037") == fused.frame.zone_ids.end());

  CHECK(p.weights().n == 49);
  CHECK(p.weights().standardized);
  CHECK(p.logdet().rho_lo < 0.0);
  CHECK(p.logdet().rho_hi == doctest::Approx(1.0).epsilon(1e-9));

  const std::vector<std::string> terms = {"(Intercept)", "median_income",
                                          "pct_bachelors", "station_count"};
  CHECK(p.ols_fit().model_kind == ModelKind::ols);
  CHECK(p.ols_fit().term_names == terms);
  CHECK(p.slm_fit().model_kind == ModelKind::spatial_lag);
  CHECK(p.sem_fit().model_kind == ModelKind::spatial_error);
  CHECK(p.gwr_fit().bandwidth_selected);
  CHECK(p.gwr_fit().kernel.bandwidth >= 5.0);

  const auto& moran = p.moran_results();
  REQUIRE(moran.size() == 4);
  for (const auto& m : moran) {
    CHECK(std::isfinite(m.i));
    CHECK(m.permutations == 199);
    CHECK(m.p_permutation >= 1.0 / 200.0);
    CHECK(m.p_permutation <= 1.0);
  }

  const auto& cv = p.cv_results();
  REQUIRE(cv.size() == 4);
  for (std::size_t m = 0; m < cv.size(); ++m) {
    CHECK(cv[m].model == kOrder[m]);
    CHECK(cv[m].folds == 5);
    CHECK(std::isfinite(cv[m].mean_train_mae));
    CHECK(std::isfinite(cv[m].mean_test_mae));
    CHECK(cv[m].mean_test_mae > 0.0);
  }

  const SweepTable& sweep = p.sweep_radius_table();
  CHECK(sweep.radii == std::vector<double>{5.0, 10.0, 25.0, 50.0});
  CHECK(sweep.models == kOrder);
  REQUIRE(sweep.aic.size() == 4);
  for (const auto& row : sweep.aic) {
    REQUIRE(row.size() == 4);
    for (double a : row) CHECK(std::isfinite(a));
  }
  REQUIRE(sweep.argmin_radius.size() == 4);
  for (double r : sweep.argmin_radius) {
    CHECK(std::find(sweep.radii.begin(), sweep.radii.end(), r) !=
          sweep.radii.end());
  }

  const auto& curve = p.sweep_threshold_table();
  REQUIRE(curve.size() == 11);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].matched_zctas <= curve[i - 1].matched_zctas);
  }

  ComparisonReport report = p.build_report();
  CHECK(report.version == "0.1.0");
  CHECK(report.n_zones == 49);
  CHECK(report.config_hash == hex64(cfg.config_hash));
  REQUIRE(report.models.size() == 4);
  CHECK(report.models[0].kind == ModelKind::ols);
  CHECK(report.models[1].is_gwr);
  CHECK(report.models[2].spatial_parameter.term == "rho");
  CHECK(report.models[3].spatial_parameter.term == "lambda");
  for (const auto& m : report.models) {
    CHECK(m.has_moran);
    CHECK(m.has_cv);
    CHECK(m.coefficients.size() == 4);
  }
  CHECK(has_warning(report.warnings, "dropped 1 zones with missing values"));
  CHECK(report.conventions.size() == 5);

  ordered_json rj = read_json_file(out / "report.json");
  CHECK(rj["spatfuse_version"] == "0.1.0");
  CHECK(rj["n_zones"] == 49);
  REQUIRE(rj["models"].size() == 4);
  CHECK(rj["models"][0]["model"] == "ols");
  CHECK(rj["models"][1]["model"] == "gwr");
  CHECK(rj["models"][2]["model"] == "spatial_lag");
  CHECK(rj["models"][3]["model"] == "spatial_error");
  CHECK(rj["models"][2]["spatial_parameter"]["term"] == "rho");
  CHECK(rj["models"][1]["gwr"]["kernel"] == "bisquare");
  CHECK(rj["models"][0]["spatial_parameter"].is_null());

  std::string text = read_text_file((out / "report.txt").string());
  CHECK(text.find("Spatial model comparison (n = 49 zones)") !=
        std::string::npos);
  CHECK(text.find("queen contiguity, row-standardized") != std::string::npos);
  CHECK(text.find("Moran's I (residuals)") != std::string::npos);
  CHECK(text.find("Significance: * p<=0.05  ** p<=0.01  *** p<=0.001") !=
        std::string::npos);

  ordered_json aj = read_json_file(out / "assembly_report.json");
  CHECK(aj["rows_in"] == 50);
  CHECK(aj["rows_dropped_missing"] == 1);
  CHECK(aj["rows_out"] == 49);
  CHECK(aj["unmatched_tracts"] == ordered_json::array({"T88888", "T99991", "T99992"}));
  CHECK(aj["island_zones"].empty());

  WeightMatrix w = read_weights_csv((out / "weights.csv").string());
  CHECK(w.n == 49);
  CHECK(w.standardized);
  CHECK(w.zone_ids == p.weights().zone_ids);

  std::map<std::string, std::string> first;
  for (const auto& name : kAllArtifacts) {
    first[name] = read_text_file((out / name).string());
  }
  Pipeline again(cfg);
  again.execute(Stage::all);
  for (const auto& name : kAllArtifacts) {
    bool identical = read_text_file((out / name).string()) == first[name];
    CHECK_MESSAGE(identical, "artifact differs between runs: " << name);
  }
}

TEST_CASE("stages run incrementally and update the status file") {
  testsupport::TempDir tmp;
  RunConfig cfg = load_config(testsupport::write_synthetic_dataset(tmp.path()));
  std::filesystem::path out(cfg.output_dir);
  Pipeline p(cfg);
  p.set_format("json");

  p.execute(Stage::validate);
  ordered_json status = read_json_file(out / "run_status.json");
  CHECK(status["status"] == "ok");
  CHECK(status["stage"] == "validate");
  CHECK(status["stages_completed"].empty());
  CHECK_FALSE(std::filesystem::exists(out / "assembly_report.json"));

  p.execute(Stage::fuse);
  CHECK(std::filesystem::exists(out / "assembly_report.json"));
  CHECK_FALSE(std::filesystem::exists(out / "weights.csv"));
  status = read_json_file(out / "run_status.json");
  CHECK(status["stages_completed"] == ordered_json::array({"fuse"}));

  p.execute(Stage::weights);
  CHECK(std::filesystem::exists(out / "weights.csv"));
  status = read_json_file(out / "run_status.json");
  CHECK(status["stages_completed"] == ordered_json::array({"fuse", "weights"}));

  p.execute(Stage::report);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK_FALSE(std::filesystem::exists(out / "report.txt"));
  status = read_json_file(out / "run_status.json");
  CHECK(status["stage"] == "report");
  CHECK(status["stages_completed"] ==
        ordered_json::array(
            {"fuse", "weights", "fit", "diagnose", "cv", "report"}));
}

TEST_CASE("failures are attributed to their stage in the status file") {
  testsupport::TempDir tmp;
  RunConfig cfg = load_config(testsupport::write_synthetic_dataset(tmp.path()));
  cfg.crosswalk_path = (tmp.path() / "missing.csv").string();
  Pipeline p(cfg);
  CHECK_THROWS_WITH_AS(p.execute(Stage::fuse),
                       doctest::Contains("stage fuse:"), DataError);
  ordered_json status =
      read_json_file(std::filesystem::path(cfg.output_dir) /
                     "run_status.json");
  CHECK(status["status"] == "failed");
  CHECK(status["stage"] == "fuse");
  CHECK(status["stale_outputs"] == true);
  CHECK_FALSE(status["error"].get<std::string>().empty());

  RunConfig cfg2 =
      load_config(testsupport::write_synthetic_dataset(tmp.path() / "b"));
  cfg2.station_column.clear();
  cfg2.predictors = {"median_income", "pct_bachelors"};
  Pipeline q(cfg2);
  CHECK_THROWS_WITH_AS(
      q.execute(Stage::sweep_radius),
      doctest::Contains(
          "stage sweep-radius: sweep-radius requires station_column"),
      ConfigError);
  status = read_json_file(std::filesystem::path(cfg2.output_dir) /
                          "run_status.json");
  CHECK(status["status"] == "failed");
  CHECK(status["stage"] == "sweep-radius");
}

TEST_CASE("the all stage skips sweeps that lack inputs") {
  testsupport::TempDir tmp;
  RunConfig cfg = load_config(write_zcta_only_dataset(tmp.path()));
  Pipeline p(cfg);
  p.execute(Stage::all);

  std::filesystem::path out(cfg.output_dir);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "report.txt"));
  CHECK_FALSE(std::filesystem::exists(out / "sweep_radius.csv"));
  CHECK_FALSE(std::filesystem::exists(out / "sweep_threshold.csv"));
  CHECK(has_warning(p.warnings().messages(), "sweep-radius skipped"));
  CHECK(has_warning(p.warnings().messages(), "sweep-threshold skipped"));

  ordered_json status = read_json_file(out / "run_status.json");
  CHECK(status["status"] == "ok");
  CHECK(status["stages_completed"] ==
        ordered_json::array(
            {"fuse", "weights", "fit", "diagnose", "cv", "report"}));

  CHECK(p.fused().frame.n() == 20);
  CHECK(p.fused().report.unmatched_tracts.empty());
  ComparisonReport report = p.build_report();
  CHECK(has_warning(report.warnings, "sweep-radius skipped"));

  CHECK_THROWS_WITH_AS(p.sweep_radius_table(),
                       doctest::Contains("requires station_column"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(p.sweep_threshold_table(),
                       doctest::Contains("requires a crosswalk"), ConfigError);
}
