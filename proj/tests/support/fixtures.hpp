#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "core/frame.hpp"
#include "core/geo.hpp"
#include "core/weights.hpp"

namespace testsupport {

// Rows x cols grid of square cells sharing edges and corners, centred near
// (lon0, lat0). Zone ids are "Z0000", "Z0001", ... in row-major order.
std::vector<spatfuse::ZonePolygon> lattice_polygons(int rows, int cols,
                                                    double cell_deg = 0.05,
                                                    double lon0 = -75.0,
                                                    double lat0 = 40.0);

std::vector<std::string> lattice_ids(int rows, int cols);

std::vector<spatfuse::GeoPoint> lattice_centroids(int rows, int cols,
                                                  double cell_deg = 0.05,
                                                  double lon0 = -75.0,
                                                  double lat0 = 40.0);

spatfuse::WeightMatrix queen_lattice(int rows, int cols,
                                     bool standardized = true);

Eigen::MatrixXd standard_normal_matrix(int n, int p, std::mt19937_64& rng);
Eigen::VectorXd standard_normal_vector(int n, std::mt19937_64& rng);

// y = (I - rho W)^{-1} (beta0 + X beta + sigma eps), dense solve.
Eigen::VectorXd slm_response(const Eigen::MatrixXd& w_dense,
                             const Eigen::MatrixXd& x, double beta0,
                             const Eigen::VectorXd& beta, double rho,
                             double sigma, std::mt19937_64& rng);

// y = beta0 + X beta + (I - lambda W)^{-1} sigma eps.
Eigen::VectorXd sem_response(const Eigen::MatrixXd& w_dense,
                             const Eigen::MatrixXd& x, double beta0,
                             const Eigen::VectorXd& beta, double lambda,
                             double sigma, std::mt19937_64& rng);

// Frame over the lattice with centroids at cell centres and predictor
// names x1..xp.
spatfuse::ModelFrame lattice_frame(int rows, int cols,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   double cell_deg = 0.05,
                                   double lon0 = -75.0, double lat0 = 40.0);

// Frame with explicit centroids, ids Z0000... and names x1..xp.
spatfuse::ModelFrame point_frame(const std::vector<spatfuse::GeoPoint>& pts,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y);

// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const;

 private:
  std::filesystem::path path_;
};

// Writes a complete miniature dataset (polygons, tract tables, crosswalk,
// stations, config) into dir and returns the config path. The layout
// mirrors data/synthetic in the repository.
std::string write_synthetic_dataset(const std::filesystem::path& dir,
                                    std::uint64_t seed = 20260823ULL);

}  // namespace testsupport
