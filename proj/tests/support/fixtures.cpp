#include "support/fixtures.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "core/spatial_index.hpp"
#include "core/weights.hpp"

namespace testsupport {

using spatfuse::GeoPoint;
using spatfuse::Ring;
using spatfuse::WeightMatrix;
using spatfuse::ZonePolygon;

std::vector<ZonePolygon> lattice_polygons(int rows, int cols, double cell_deg,
                                          double lon0, double lat0) {
  std::vector<ZonePolygon> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  std::vector<std::string> ids = lattice_ids(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double x0 = lon0 + c * cell_deg;
      double x1 = lon0 + (c + 1) * cell_deg;
      double y0 = lat0 + r * cell_deg;
      double y1 = lat0 + (r + 1) * cell_deg;
      ZonePolygon p;
      p.zone_id = ids[static_cast<std::size_t>(r * cols + c)];
      Ring ring;
      ring.pts = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
      p.rings.push_back(ring);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<std::string> lattice_ids(int rows, int cols) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int i = 0; i < rows * cols; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "Z%04d", i);
    ids.emplace_back(buf);
  }
  return ids;
}

std::vector<GeoPoint> lattice_centroids(int rows, int cols, double cell_deg,
                                        double lon0, double lat0) {
  std::vector<GeoPoint> pts;
  pts.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      pts.push_back({lon0 + (c + 0.5) * cell_deg, lat0 + (r + 0.5) * cell_deg});
    }
  }
  return pts;
}

WeightMatrix queen_lattice(int rows, int cols, bool standardized) {
  WeightMatrix w = spatfuse::build_queen_contiguity(
      lattice_polygons(rows, cols));
  if (standardized) w = spatfuse::row_standardize(w);
  return w;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  while (u1 <= 1e-300) u1 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643 * u2);
}

}  // namespace

Eigen::MatrixXd standard_normal_matrix(int n, int p, std::mt19937_64& rng) {
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = normal01(rng);
  }
  return x;
}

Eigen::VectorXd standard_normal_vector(int n, std::mt19937_64& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal01(rng);
  return v;
}

Eigen::VectorXd slm_response(const Eigen::MatrixXd& w_dense,
                             const Eigen::MatrixXd& x, double beta0,
                             const Eigen::VectorXd& beta, double rho,
                             double sigma, std::mt19937_64& rng) {
  int n = static_cast<int>(x.rows());
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, beta0) + x * beta +
                        sigma * standard_normal_vector(n, rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w_dense;
  return a.partialPivLu().solve(rhs);
}

Eigen::VectorXd sem_response(const Eigen::MatrixXd& w_dense,
                             const Eigen::MatrixXd& x, double beta0,
                             const Eigen::VectorXd& beta, double lambda,
                             double sigma, std::mt19937_64& rng) {
  int n = static_cast<int>(x.rows());
  Eigen::VectorXd eps = sigma * standard_normal_vector(n, rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - lambda * w_dense;
  return Eigen::VectorXd::Constant(n, beta0) + x * beta +
         a.partialPivLu().solve(eps);
}

spatfuse::ModelFrame lattice_frame(int rows, int cols,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y, double cell_deg,
                                   double lon0, double lat0) {
  spatfuse::ModelFrame frame;
  frame.zone_ids = lattice_ids(rows, cols);
  frame.centroids = lattice_centroids(rows, cols, cell_deg, lon0, lat0);
  frame.X = x;
  frame.y = y;
  for (int j = 0; j < x.cols(); ++j) {
    frame.column_names.push_back("x" + std::to_string(j + 1));
  }
  return frame;
}

spatfuse::ModelFrame point_frame(const std::vector<GeoPoint>& pts,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y) {
  spatfuse::ModelFrame frame;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "Z%04d", static_cast<int>(i));
    frame.zone_ids.emplace_back(buf);
  }
  frame.centroids = pts;
  frame.X = x;
  frame.y = y;
  for (int j = 0; j < x.cols(); ++j) {
    frame.column_names.push_back("x" + std::to_string(j + 1));
  }
  return frame;
}

TempDir::TempDir() {
  std::random_device rd;
  std::uint64_t tag =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spatfuse-%016llx",
                static_cast<unsigned long long>(tag));
  path_ = std::filesystem::temp_directory_path() / buf;
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const {
  return (path_ / name).string();
}

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  FILE* f = std::fopen(p.string().c_str(), "wb");
  std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
}

}  // namespace

std::string write_synthetic_dataset(const std::filesystem::path& dir,
                                    std::uint64_t seed) {
  namespace fs = std::filesystem;
  using nlohmann::ordered_json;
  fs::create_directories(dir);

  const int rows = 5, cols = 10;
  const double cell = 0.1, lon0 = -76.0, lat0 = 40.0;
  const int n_zones = rows * cols;
  std::mt19937_64 rng(seed);

  std::vector<std::string> zctas;
  for (int i = 0; i < n_zones; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "9%04d", i + 1);
    zctas.emplace_back(buf);
  }

  ordered_json features = ordered_json::array();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double x0 = lon0 + c * cell, x1 = lon0 + (c + 1) * cell;
      double y0 = lat0 + r * cell, y1 = lat0 + (r + 1) * cell;
      ordered_json ring = ordered_json::array(
          {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
      ordered_json f = {
          {"type", "Feature"},
          {"properties", {{"id", zctas[static_cast<std::size_t>(r * cols + c)]}}},
          {"geometry",
           {{"type", "Polygon"}, {"coordinates", ordered_json::array({ring})}}}};
      features.push_back(f);
    }
  }
  ordered_json fc = {{"type", "FeatureCollection"}, {"features", features}};
  write_file(dir / "zones.geojson", fc.dump(2) + "\n");

  std::vector<GeoPoint> centroids;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      centroids.push_back({lon0 + (c + 0.5) * cell, lat0 + (r + 0.5) * cell});
    }
  }

  int n_stations = 70;
  std::vector<GeoPoint> stations;
  std::string stations_csv = "id,longitude,latitude\n";
  for (int s = 0; s < n_stations; ++s) {
    GeoPoint pt{lon0 - 0.15 + uniform01(rng) * (cols * cell + 0.3),
                lat0 - 0.15 + uniform01(rng) * (rows * cell + 0.3)};
    stations.push_back(pt);
    stations_csv += "S" + std::to_string(s + 1) + "," + fmt(pt.lon, 6) + "," +
                    fmt(pt.lat, 6) + "\n";
  }
  write_file(dir / "stations.csv", stations_csv);

  // Two tracts per zcta: tract "a" splits 0.65/0.35 with the neighbour to
  // the east (or stays whole on the last column); tract "b" is whole.
  // Extras: a duplicated split row, two sub-threshold tracts, and one
  // tract that never appears in the attribute table.
  std::string cw = "tract_id,zcta_id,population_share\n";
  for (int z = 0; z < n_zones; ++z) {
    const std::string& id = zctas[static_cast<std::size_t>(z)];
    std::string ta = "T" + id + "a";
    std::string tb = "T" + id + "b";
    bool has_east = (z % cols) != cols - 1;
    if (id == "90012") {
      cw += ta + "," + id + ",0.30\n";
      cw += ta + "," + id + ",0.35\n";
      cw += ta + "," + zctas[static_cast<std::size_t>(z + 1)] + ",0.35\n";
    } else if (has_east) {
      cw += ta + "," + id + ",0.65\n";
      cw += ta + "," + zctas[static_cast<std::size_t>(z + 1)] + ",0.35\n";
    } else {
      cw += ta + "," + id + ",1.0\n";
    }
    cw += tb + "," + id + ",1.0\n";
  }
  cw += "T99991,90001,0.18\nT99991,90002,0.17\nT99991,90003,0.17\n";
  cw += "T99991,90004,0.16\nT99991,90005,0.16\nT99991,90006,0.16\n";
  cw += "T99992,90021,0.19\nT99992,90022,0.17\nT99992,90023,0.17\n";
  cw += "T99992,90024,0.17\nT99992,90025,0.15\nT99992,90026,0.15\n";
  cw += "T88888,90007,1.0\n";
  write_file(dir / "crosswalk.csv", cw);

  // Tract attributes with a west-to-east income gradient.
  std::string demo = "tract_id,population,median_income,pct_bachelors\n";
  std::vector<double> zone_income(static_cast<std::size_t>(n_zones));
  std::vector<double> zone_bach(static_cast<std::size_t>(n_zones));
  for (int z = 0; z < n_zones; ++z) {
    int c = z % cols;
    zone_income[static_cast<std::size_t>(z)] =
        45000.0 + 1800.0 * c + 9000.0 * uniform01(rng);
    zone_bach[static_cast<std::size_t>(z)] =
        14.0 + 1.1 * c + 18.0 * uniform01(rng);
  }
  auto emit_tract = [&](const std::string& tid, int z, bool missing_income) {
    int pop = 900 + static_cast<int>(uniform01(rng) * 6200.0);
    double inc = zone_income[static_cast<std::size_t>(z)] +
                 2500.0 * normal01(rng);
    double bach = zone_bach[static_cast<std::size_t>(z)] + 2.5 * normal01(rng);
    if (bach < 3.0) bach = 3.0;
    demo += tid + "," + std::to_string(pop) + "," +
            (missing_income ? std::string() : fmt(inc, 2)) + "," +
            fmt(bach, 3) + "\n";
  };
  for (int z = 0; z < n_zones; ++z) {
    const std::string& id = zctas[static_cast<std::size_t>(z)];
    emit_tract("T" + id + "a", z, id == "90015");
    emit_tract("T" + id + "b", z, id == "90022");
  }
  emit_tract("T99991", 2, false);
  emit_tract("T99992", 22, false);
  write_file(dir / "demographics.csv", demo);

  // Target from station access, income, and education, with one missing
  // cell to exercise listwise deletion.
  std::vector<int> counts =
      spatfuse::count_within_radius(centroids, stations, 10.0);
  double cmean = 0.0, imean = 0.0, bmean = 0.0;
  for (int z = 0; z < n_zones; ++z) {
    cmean += counts[static_cast<std::size_t>(z)];
    imean += zone_income[static_cast<std::size_t>(z)];
    bmean += zone_bach[static_cast<std::size_t>(z)];
  }
  cmean /= n_zones;
  imean /= n_zones;
  bmean /= n_zones;
  std::string reg = "zcta_id,ev_count\n";
  for (int z = 0; z < n_zones; ++z) {
    double zc = (counts[static_cast<std::size_t>(z)] - cmean) / 3.0;
    double zi = (zone_income[static_cast<std::size_t>(z)] - imean) / 9000.0;
    double zb = (zone_bach[static_cast<std::size_t>(z)] - bmean) / 8.0;
    double ev =
        std::exp(1.6 + 0.45 * zi + 0.30 * zb + 0.35 * zc + 0.25 * normal01(rng));
    long count = std::lround(10.0 * ev);
    reg += zctas[static_cast<std::size_t>(z)] + "," +
           (zctas[static_cast<std::size_t>(z)] == "90037"
                ? std::string()
                : std::to_string(count)) +
           "\n";
  }
  write_file(dir / "registrations.csv", reg);

  ordered_json cfg = {
      {"polygons", "zones.geojson"},
      {"stations", "stations.csv"},
      {"crosswalk", "crosswalk.csv"},
      {"tables",
       ordered_json::array(
           {{{"path", "registrations.csv"}, {"level", "zcta"}},
            {{"path", "demographics.csv"},
             {"level", "tract"},
             {"population_column", "population"}}})},
      {"target", "ev_count"},
      {"predictors",
       ordered_json::array({"median_income", "pct_bachelors", "station_count"})},
      {"station_column", "station_count"},
      {"station_radius", 10},
      {"crosswalk_threshold", 0.2},
      {"radii", ordered_json::array({5, 10, 25, 50})},
      {"cv", {{"folds", 5}, {"seed", 319}}},
      {"moran", {{"permutations", 199}, {"seed", 271}}},
      {"output_dir", "out"},
  };
  write_file(dir / "config.json", cfg.dump(2) + "\n");
  return (dir / "config.json").string();
}

}  // namespace testsupport
