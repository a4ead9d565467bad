#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/geo.hpp"
#include "core/util.hpp"

namespace spatfuse {

// Sparse spatial weight matrix over n zones. No self-weights; the binary
// (non-standardized) form is symmetric.
struct WeightMatrix {
  int n = 0;
  bool standardized = false;
  std::vector<std::string> zone_ids;
  // Adjacency lists per row, sorted by column index.
  std::vector<std::vector<std::pair<int, double>>> rows;

  double at(int i, int j) const;
  double row_sum(int i) const;
  int degree(int i) const { return static_cast<int>(rows[static_cast<std::size_t>(i)].size()); }
  bool is_island(int i) const { return degree(i) == 0; }
  std::vector<std::string> island_ids() const;
  std::size_t edge_count() const;
  double total_weight() const;  // S0
  Eigen::MatrixXd dense() const;
};

// Queen contiguity from polygon geometry: zones are neighbors when they
// share at least one vertex after snapping to kVertexSnapDegrees.
// Near-linear build via a snapped-vertex hash.
WeightMatrix build_queen_contiguity(const std::vector<ZonePolygon>& polygons);

// O(n^2) fallback using the same coincidence predicate, kept as an
// independent route for testing the hash build.
WeightMatrix build_queen_contiguity_pairwise(
    const std::vector<ZonePolygon>& polygons);

// Divides each nonzero row by its row sum. Islands pass through as zero
// rows with a warning. Rejects already-standardized input.
WeightMatrix row_standardize(const WeightMatrix& w,
                             WarningLog* warnings = nullptr);

std::vector<double> spatial_lag_vector(const WeightMatrix& w,
                                       const std::vector<double>& x);
Eigen::VectorXd spatial_lag_vector(const WeightMatrix& w,
                                   const Eigen::VectorXd& x);

// Submatrix over `keep` (original row indices, in order). Entries whose
// endpoints both survive are retained; a standardized input is
// re-standardized over the surviving entries.
WeightMatrix restrict_weights(const WeightMatrix& w,
                              const std::vector<int>& keep,
                              WarningLog* warnings = nullptr);

enum class KernelKind { gaussian, bisquare };

std::string kernel_kind_name(KernelKind k);
KernelKind kernel_kind_from_name(const std::string& name);

// Distance-decay kernel. Fixed mode: bandwidth in miles. Adaptive mode:
// bandwidth is a neighbor count and the effective radius at each focal
// point is the distance of its bandwidth-th nearest location.
struct KernelSpec {
  KernelKind kind = KernelKind::bisquare;
  double bandwidth = 0.0;
  bool adaptive = false;
};

void validate_kernel_spec(const KernelSpec& spec, int n_locations);

std::vector<double> kernel_weights(const GeoPoint& focal,
                                   const std::vector<GeoPoint>& locations,
                                   const KernelSpec& spec);

}  // namespace spatfuse
