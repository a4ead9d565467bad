#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "core/util.hpp"

namespace spatfuse {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string display_model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ols: return "OLS";
    case ModelKind::gwr: return "GWR";
    case ModelKind::spatial_lag: return "Spatial Lag";
    case ModelKind::spatial_error: return "Spatial Error";
  }
  return "?";
}

double json_safe(double v) { return v; }  // nlohmann serializes non-finite as null

std::string fmt_or_dash(double v, int decimals) {
  if (!std::isfinite(v)) return "--";
  return format_double(v, decimals);
}

// "0.52*** (0.04)" — estimate with stars, standard error in parentheses.
std::string cell_text(const TermCell& cell) {
  std::string s = fmt_or_dash(cell.estimate, 2);
  if (s == "--") return s;
  s += significance_stars(cell.p_value);
  s += " (" + fmt_or_dash(cell.std_error, 2) + ")";
  return s;
}

ordered_json term_json(const TermCell& cell) {
  ordered_json j;
  j["term"] = cell.term;
  j["estimate"] = json_safe(cell.estimate);
  j["std_error"] = json_safe(cell.std_error);
  j["p_value"] = json_safe(cell.p_value);
  j["stars"] = significance_stars(cell.p_value);
  return j;
}

}  // namespace

std::string significance_stars(double p_value) {
  if (!std::isfinite(p_value)) return "";
  if (p_value <= 0.001) return "***";
  if (p_value <= 0.01) return "**";
  if (p_value <= 0.05) return "*";
  return "";
}

double moran_star_p(const MoranResult& moran) {
  return moran.permutations > 0 ? moran.p_permutation : moran.p_normal;
}

std::string render_report_json(const ComparisonReport& report) {
  ordered_json j;
  j["spatfuse_version"] = report.version;
  j["config_hash"] = report.config_hash;
  j["n_zones"] = report.n_zones;
  ordered_json settings;
  settings["weights"] =
      report.weights_standardized ? "row-standardized" : "binary";
  settings["crosswalk_threshold"] = report.crosswalk_threshold;
  settings["boxcox"] = {{"lambda", json_safe(report.boxcox.lambda)},
                        {"offset", json_safe(report.boxcox.offset)}};
  settings["cv_folds"] = report.cv_folds;
  settings["cv_seed"] = report.cv_seed;
  settings["moran_permutations"] = report.moran_permutations;
  settings["moran_seed"] = report.moran_seed;
  j["settings"] = settings;

  ordered_json assembly;
  assembly["rows_in"] = report.assembly.rows_in;
  assembly["rows_dropped_missing"] = report.assembly.rows_dropped_missing;
  assembly["rows_out"] = report.assembly.rows_out;
  assembly["unmatched_tracts"] = report.assembly.unmatched_tracts;
  assembly["island_zones"] = report.assembly.island_zones;
  assembly["threshold_used"] = json_safe(report.assembly.threshold_used);
  j["assembly"] = assembly;

  ordered_json stand = ordered_json::array();
  for (std::size_t c = 0; c < report.standardization.names.size(); ++c) {
    stand.push_back({{"name", report.standardization.names[c]},
                     {"mean", json_safe(report.standardization.mean[c])},
                     {"sd", json_safe(report.standardization.sd[c])}});
  }
  j["standardization"] = stand;

  ordered_json vif = ordered_json::array();
  for (std::size_t c = 0; c < report.vif.names.size(); ++c) {
    vif.push_back({{"name", report.vif.names[c]},
                   {"vif", json_safe(report.vif.values(
                               static_cast<Eigen::Index>(c)))}});
  }
  j["vif"] = vif;

  ordered_json models = ordered_json::array();
  for (const auto& m : report.models) {
    ordered_json mj;
    mj["model"] = model_kind_name(m.kind);
    mj["label"] = display_model_name(m.kind);
    ordered_json coefs = ordered_json::array();
    for (const auto& c : m.coefficients) coefs.push_back(term_json(c));
    mj["coefficients"] = coefs;
    if (m.has_spatial_parameter) {
      mj["spatial_parameter"] = term_json(m.spatial_parameter);
    } else {
      mj["spatial_parameter"] = nullptr;
    }
    if (m.is_gwr) {
      mj["gwr"] = {{"kernel", kernel_kind_name(m.gwr_kernel.kind)},
                   {"adaptive", m.gwr_kernel.adaptive},
                   {"bandwidth", json_safe(m.gwr_kernel.bandwidth)},
                   {"effective_parameters",
                    json_safe(m.gwr_effective_parameters)}};
    } else {
      mj["gwr"] = nullptr;
    }
    mj["log_likelihood"] = json_safe(m.log_likelihood);
    mj["aic"] = json_safe(m.aic);
    mj["adjusted_r2"] = json_safe(m.adjusted_r2);
    mj["sigma2"] = json_safe(m.sigma2);
    if (m.has_moran) {
      mj["moran"] = {{"i", json_safe(m.moran.i)},
                     {"expected", json_safe(m.moran.expected)},
                     {"variance", json_safe(m.moran.variance)},
                     {"z", json_safe(m.moran.z_score)},
                     {"p_normal", json_safe(m.moran.p_normal)},
                     {"p_permutation", json_safe(m.moran.p_permutation)},
                     {"stars", significance_stars(moran_star_p(m.moran))}};
    } else {
      mj["moran"] = nullptr;
    }
    if (m.has_cv) {
      mj["cv"] = {{"train_mae", json_safe(m.train_mae)},
                  {"test_mae", json_safe(m.test_mae)}};
    } else {
      mj["cv"] = nullptr;
    }
    models.push_back(mj);
  }
  j["models"] = models;
  j["warnings"] = report.warnings;
  j["conventions"] = report.conventions;
  return j.dump(2) + "\n";
}

std::string render_report_text(const ComparisonReport& report) {
  const std::size_t name_w = 26;
  const std::size_t col_w = 24;
  std::size_t total = name_w + col_w * report.models.size();

  std::ostringstream os;
  os << "Spatial model comparison (n = " << report.n_zones << " zones)\n";
  os << "Weights: "
     << (report.weights_standardized ? "queen contiguity, row-standardized"
                                     : "queen contiguity, binary")
     << " | Box-Cox lambda = " << fmt_or_dash(report.boxcox.lambda, 4)
     << " (offset " << fmt_or_dash(report.boxcox.offset, 2) << ")\n";
  os << std::string(total, '=') << "\n";

  auto name_cell = [&](std::string s) {
    if (s.size() >= name_w) s = s.substr(0, name_w - 1);
    s.resize(name_w, ' ');
    return s;
  };
  std::string header = name_cell("Term");
  for (const auto& m : report.models) {
    std::string label = display_model_name(m.kind);
    if (m.is_gwr) label += " (mean)";
    std::string cell = label;
    cell.resize(col_w, ' ');
    header += cell;
  }
  os << header << "\n" << std::string(total, '-') << "\n";

  std::size_t n_terms =
      report.models.empty() ? 0 : report.models[0].coefficients.size();
  for (std::size_t t = 0; t < n_terms; ++t) {
    std::string line = name_cell(report.models[0].coefficients[t].term);
    for (const auto& m : report.models) {
      std::string cell = t < m.coefficients.size()
                             ? cell_text(m.coefficients[t])
                             : "--";
      cell.resize(col_w, ' ');
      line += cell;
    }
    os << line << "\n";
  }

  std::string sp_line = name_cell("Spatial parameter");
  for (const auto& m : report.models) {
    std::string cell =
        m.has_spatial_parameter ? cell_text(m.spatial_parameter) : "--";
    cell.resize(col_w, ' ');
    sp_line += cell;
  }
  os << sp_line << "\n" << std::string(total, '-') << "\n";

  auto metric_row = [&](const std::string& label, auto getter, int decimals) {
    std::string line = name_cell(label);
    for (const auto& m : report.models) {
      std::string cell = getter(m, decimals);
      cell.resize(col_w, ' ');
      line += cell;
    }
    os << line << "\n";
  };
  metric_row("Moran's I (residuals)",
             [](const ModelReport& m, int d) {
               if (!m.has_moran) return std::string("--");
               std::string s = fmt_or_dash(m.moran.i, d);
               if (s != "--") s += significance_stars(moran_star_p(m.moran));
               return s;
             },
             4);
  metric_row("Adjusted R-squared",
             [](const ModelReport& m, int d) {
               return fmt_or_dash(m.adjusted_r2, d);
             },
             2);
  metric_row("AIC",
             [](const ModelReport& m, int d) {
               return fmt_or_dash(m.aic, d);
             },
             2);
  metric_row("Log-likelihood",
             [](const ModelReport& m, int d) {
               return fmt_or_dash(m.log_likelihood, d);
             },
             2);
  metric_row("Train MAE (CV)",
             [](const ModelReport& m, int d) {
               return m.has_cv ? fmt_or_dash(m.train_mae, d)
                               : std::string("--");
             },
             2);
  metric_row("Test MAE (CV)",
             [](const ModelReport& m, int d) {
               return m.has_cv ? fmt_or_dash(m.test_mae, d)
                               : std::string("--");
             },
             2);
  os << std::string(total, '-') << "\n";

  os << "VIF:";
  for (std::size_t c = 0; c < report.vif.names.size(); ++c) {
    os << (c ? ", " : " ") << report.vif.names[c] << " "
       << fmt_or_dash(report.vif.values(static_cast<Eigen::Index>(c)), 2);
  }
  os << "\n";
  os << "Significance: * p<=0.05  ** p<=0.01  *** p<=0.001\n";
  if (!report.warnings.empty()) {
    os << "Warnings:\n";
    for (const auto& w : report.warnings) os << "  - " << w << "\n";
  }
  return os.str();
}

std::string render_assembly_json(const AssemblyReport& report,
                                 const BoxCoxSpec& boxcox,
                                 const StandardizationParams& standardization) {
  ordered_json j;
  j["rows_in"] = report.rows_in;
  j["rows_dropped_missing"] = report.rows_dropped_missing;
  j["rows_out"] = report.rows_out;
  j["unmatched_tracts"] = report.unmatched_tracts;
  j["island_zones"] = report.island_zones;
  j["threshold_used"] = json_safe(report.threshold_used);
  j["boxcox"] = {{"lambda", json_safe(boxcox.lambda)},
                 {"offset", json_safe(boxcox.offset)}};
  ordered_json stand = ordered_json::array();
  for (std::size_t c = 0; c < standardization.names.size(); ++c) {
    stand.push_back({{"name", standardization.names[c]},
                     {"mean", json_safe(standardization.mean[c])},
                     {"sd", json_safe(standardization.sd[c])}});
  }
  j["standardization"] = stand;
  return j.dump(2) + "\n";
}

std::string render_sweep_radius_csv(const SweepTable& table) {
  std::ostringstream os;
  os << "radius,model_kind,aic\n";
  os.precision(17);
  for (std::size_t r = 0; r < table.radii.size(); ++r) {
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      os << table.radii[r] << "," << model_kind_name(table.models[m]) << ","
         << table.aic[r][m] << "\n";
    }
  }
  return os.str();
}

std::string render_sweep_radius_summary_json(const SweepTable& table) {
  ordered_json j;
  ordered_json argmin;
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    argmin[model_kind_name(table.models[m])] =
        json_safe(table.argmin_radius[m]);
  }
  j["argmin_radius"] = argmin;
  j["radii"] = table.radii;
  return j.dump(2) + "\n";
}

std::string render_sweep_threshold_csv(const std::vector<ThresholdCount>& rows,
                                       double default_threshold) {
  std::ostringstream os;
  os << "threshold,matched_zctas\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.threshold << "," << r.matched_zctas << "\n";
  }
  (void)default_threshold;
  return os.str();
}

std::string render_sweep_threshold_summary_json(
    const std::vector<ThresholdCount>& rows, double default_threshold) {
  ordered_json j;
  j["default_threshold"] = json_safe(default_threshold);
  int at_default = -1;
  for (const auto& r : rows) {
    if (r.threshold == default_threshold) at_default = r.matched_zctas;
  }
  if (at_default >= 0) {
    j["matched_at_default"] = at_default;
  } else {
    j["matched_at_default"] = nullptr;
  }
  ordered_json curve = ordered_json::array();
  for (const auto& r : rows) {
    curve.push_back({{"threshold", json_safe(r.threshold)},
                     {"matched_zctas", r.matched_zctas}});
  }
  j["curve"] = curve;
  return j.dump(2) + "\n";
}

}  // namespace spatfuse
