#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "core/estimators.hpp"
#include "core/frame.hpp"
#include "core/geo.hpp"
#include "core/gwr.hpp"
#include "support/fixtures.hpp"

using namespace spatfuse;

namespace {

Eigen::MatrixXd distance_matrix(const ModelFrame& frame) {
  int n = frame.n();
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double v = haversine_miles(frame.centroids[static_cast<std::size_t>(i)],
                                 frame.centroids[static_cast<std::size_t>(j)]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double kernel_at(double d, double h, KernelKind kind) {
  if (kind == KernelKind::gaussian) {
    return std::exp(-0.5 * (d / h) * (d / h));
  }
  if (d >= h) return 0.0;
  double u = 1.0 - (d / h) * (d / h);
  return u * u;
}

ModelFrame heterogeneous_frame(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int n = rows * cols;
  Eigen::MatrixXd x = testsupport::standard_normal_matrix(n, 2, rng);
  Eigen::VectorXd y(n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int i = r * cols + c;
      double drift = static_cast<double>(c) / std::max(1, cols - 1);
      y(i) = 1.0 + (0.5 + 2.0 * drift) * x(i, 0) +
             (1.5 - 3.0 * drift) * x(i, 1);
    }
  }
  y += 0.3 * testsupport::standard_normal_vector(n, rng);
  return testsupport::lattice_frame(rows, cols, x, y);
}

}  // namespace

TEST_CASE("gwr with a near-flat kernel collapses to the global ols fit") {
  std::mt19937_64 rng(17);
  Eigen::MatrixXd x = testsupport::standard_normal_matrix(30, 2, rng);
  Eigen::VectorXd y = (x * Eigen::Vector2d(1.0, -2.0)).eval();
  y.array() += 0.5;
  y += 0.6 * testsupport::standard_normal_vector(30, rng);
  ModelFrame frame = testsupport::lattice_frame(5, 6, x, y);
  FitResult ols = fit_ols(frame);

  GwrResult res = fit_gwr(frame, {KernelKind::gaussian, 1e7, false}, 1);
  for (int i = 0; i < res.n(); ++i) {
    for (int t = 0; t < 3; ++t) {
      CHECK(res.local_beta(i, t) == doctest::Approx(ols.beta(t)).epsilon(1e-6));
    }
  }
  CHECK(res.effective_parameters == doctest::Approx(3.0).epsilon(1e-6));
  CHECK((res.residuals - ols.residuals).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gwr summary statistics match a dense hat-matrix computation") {
  ModelFrame frame = heterogeneous_frame(3, 4, 23);
  KernelSpec spec{KernelKind::gaussian, 8.0, true};
  GwrResult res = fit_gwr(frame, spec, 1);

  int n = frame.n(), k = frame.p() + 1;
  Eigen::MatrixXd z(n, k);
  z.col(0).setOnes();
  z.rightCols(frame.p()) = frame.X;
  Eigen::MatrixXd dist = distance_matrix(frame);

  Eigen::MatrixXd s(n, n);
  Eigen::MatrixXd beta_all(n, k);
  Eigen::MatrixXd c2(n, k);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd drow = dist.row(i);
    std::vector<double> row(drow.data(), drow.data() + n);
    std::sort(row.begin(), row.end());
    double h = row[static_cast<std::size_t>(spec.bandwidth) - 1];
    Eigen::VectorXd kappa(n);
    for (int j = 0; j < n; ++j) kappa(j) = kernel_at(dist(i, j), h, spec.kind);
    Eigen::MatrixXd m = (z.transpose() * kappa.asDiagonal() * z).inverse();
    beta_all.row(i) =
        (m * (z.transpose() * (kappa.asDiagonal() * frame.y))).transpose();
    Eigen::MatrixXd g = z * m;
    for (int j = 0; j < n; ++j) {
      s(i, j) = kappa(j) * z.row(i).dot(g.row(j));
    }
    for (int t = 0; t < k; ++t) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        double e = kappa(j) * g(j, t);
        acc += e * e;
      }
      c2(i, t) = acc;
    }
  }

  double tr_s = s.trace();
  double tr_sts = (s.transpose() * s).trace();
  Eigen::VectorXd resid = frame.y - s * frame.y;
  double rss = resid.squaredNorm();
  double aicc = n * std::log(rss / n) + n * std::log(2.0 * M_PI) +
                n * (n + tr_s) / (n - 2.0 - tr_s);
  double delta1 = n - 2.0 * tr_s + tr_sts;
  double sigma2 = rss / delta1;

  CHECK(res.effective_parameters == doctest::Approx(tr_s).epsilon(1e-8));
  CHECK(res.trace_sts == doctest::Approx(tr_sts).epsilon(1e-8));
  CHECK(res.aic == doctest::Approx(aicc).epsilon(1e-8));
  CHECK(res.sigma2 == doctest::Approx(sigma2).epsilon(1e-8));
  CHECK((res.residuals - resid).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((res.local_beta - beta_all).cwiseAbs().maxCoeff() < 1e-8);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < k; ++t) {
      CHECK(res.local_std_errors(i, t) ==
            doctest::Approx(std::sqrt(sigma2 * c2(i, t))).epsilon(1e-8));
    }
  }
  double tss = (frame.y.array() - frame.y.mean()).square().sum();
  double r2 = 1.0 - rss / tss;
  double adj = 1.0 - (1.0 - r2) * (n - 1.0) / (delta1 - 1.0);
  CHECK(res.adjusted_r2 == doctest::Approx(adj).epsilon(1e-8));
  CHECK(res.effective_parameters >= 3.0 - 1e-9);
  CHECK(res.effective_parameters <= static_cast<double>(n));
}

TEST_CASE("corrected aic is infinite for degenerate kernels") {
  ModelFrame frame = heterogeneous_frame(3, 4, 31);
  double tiny = gwr_aicc(frame, {KernelKind::gaussian, 1e-6, false}, 1);
  CHECK(std::isinf(tiny));
  CHECK(tiny > 0.0);

  // A flat kernel on a tiny frame leaves no residual degrees of freedom:
  // the hat-matrix trace approaches p + 1 while n - 2 - trace goes negative.
  std::mt19937_64 rng(2);
  Eigen::MatrixXd x = testsupport::standard_normal_matrix(4, 2, rng);
  Eigen::VectorXd y = (x * Eigen::Vector2d(2.0, 1.0)).eval();
  y.array() += 3.0;
  y += testsupport::standard_normal_vector(4, rng);
  ModelFrame cramped = testsupport::lattice_frame(2, 2, x, y);
  double flat = gwr_aicc(cramped, {KernelKind::gaussian, 1e7, false}, 1);
  CHECK(std::isinf(flat));
}

TEST_CASE("gwr rejects a bandwidth too narrow to identify the local fits") {
  ModelFrame frame = heterogeneous_frame(4, 4, 7);
  CHECK_THROWS_WITH_AS(fit_gwr(frame, {KernelKind::bisquare, 1.0, false}, 1),
                       doctest::Contains("singular; increase the bandwidth"),
                       NumericError);
  CHECK_THROWS_WITH_AS(fit_gwr(frame, {KernelKind::bisquare, 1.0, false}, 1),
                       doctest::Contains("Z0000"), NumericError);
}

TEST_CASE("adaptive bandwidth selection agrees with an exhaustive scan") {
  ModelFrame frame = heterogeneous_frame(6, 10, 43);
  KernelSpec chosen =
      select_bandwidth(frame, KernelKind::bisquare, true, 1, nullptr);
  CHECK(chosen.adaptive);

  int best_k = -1;
  double best_v = std::numeric_limits<double>::infinity();
  for (int k = frame.p() + 2; k <= frame.n() - 1; ++k) {
    double v =
        gwr_aicc(frame, {KernelKind::bisquare, static_cast<double>(k), true}, 1);
    if (v < best_v) {
      best_v = v;
      best_k = k;
    }
  }
  CHECK(static_cast<int>(chosen.bandwidth) == best_k);
  CHECK(gwr_aicc(frame, chosen, 1) == doctest::Approx(best_v));
}

TEST_CASE("homogeneous data pushes the adaptive bandwidth toward the maximum") {
  std::mt19937_64 master(20260823ULL);
  int wide = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(master());
    Eigen::MatrixXd x = testsupport::standard_normal_matrix(48, 2, rng);
    Eigen::VectorXd y = (x * Eigen::Vector2d(1.0, -0.7)).eval();
    y.array() += 2.0;
    y += 0.5 * testsupport::standard_normal_vector(48, rng);
    ModelFrame frame = testsupport::lattice_frame(6, 8, x, y);
    KernelSpec spec =
        select_bandwidth(frame, KernelKind::bisquare, true, 1, nullptr);
    int lo = frame.p() + 2, hi = frame.n() - 1;
    if (spec.bandwidth >= lo + 0.75 * (hi - lo)) ++wide;
  }
  CHECK(wide >= 16);
}

TEST_CASE("two regimes far apart pull the adaptive bandwidth off the wide boundary") {
  std::mt19937_64 rng(77);
  std::vector<GeoPoint> pts = testsupport::lattice_centroids(5, 6, 0.05, -75.0, 40.0);
  std::vector<GeoPoint> east = testsupport::lattice_centroids(5, 6, 0.05, -73.0, 40.0);
  pts.insert(pts.end(), east.begin(), east.end());
  int n = static_cast<int>(pts.size());
  Eigen::MatrixXd x = testsupport::standard_normal_matrix(n, 2, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double sign = i < n / 2 ? 1.0 : -1.0;
    y(i) = sign * (2.0 + 2.0 * x(i, 0) - 1.0 * x(i, 1));
  }
  y += 0.3 * testsupport::standard_normal_vector(n, rng);
  ModelFrame frame = testsupport::point_frame(pts, x, y);

  KernelSpec spec =
      select_bandwidth(frame, KernelKind::bisquare, true, 1, nullptr);
  // Once the bandwidth spans the gap between the clusters the within-cluster
  // weights flatten, so the optimum sits just past one cluster's size rather
  // than in the wide top quarter favoured by homogeneous data.
  int lo = frame.p() + 2, hi = frame.n() - 1;
  CHECK(spec.bandwidth < lo + 0.75 * (hi - lo));
}

TEST_CASE("gwr_predict_at reproduces in-sample fitted values at the centroids") {
  ModelFrame frame = heterogeneous_frame(4, 5, 19);
  KernelSpec spec{KernelKind::bisquare, 10.0, true};
  GwrResult res = fit_gwr(frame, spec, 1);
  for (int i : {0, 7, 19}) {
    double fitted = frame.y(i) - res.residuals(i);
    double pred = gwr_predict_at(frame, spec, frame.centroids[static_cast<std::size_t>(i)],
                                 frame.X.row(i));
    CHECK(pred == doctest::Approx(fitted).epsilon(1e-10));
  }
  Eigen::RowVectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_WITH_AS(
      gwr_predict_at(frame, spec, frame.centroids[0], wrong),
      doctest::Contains("predictor values do not match"), NumericError);
}

TEST_CASE("fit_gwr_auto selects only when no bandwidth is pinned") {
  ModelFrame frame = heterogeneous_frame(4, 5, 3);
  GwrSettings fixed{KernelKind::bisquare, true, 12.0};
  GwrResult pinned = fit_gwr_auto(frame, fixed, 1);
  CHECK_FALSE(pinned.bandwidth_selected);
  CHECK(pinned.kernel.bandwidth == 12.0);

  GwrSettings open{KernelKind::bisquare, true, 0.0};
  WarningLog warn;
  GwrResult chosen = fit_gwr_auto(frame, open, 1, &warn);
  CHECK(chosen.bandwidth_selected);
  KernelSpec direct = select_bandwidth(frame, KernelKind::bisquare, true, 1);
  CHECK(chosen.kernel.bandwidth == direct.bandwidth);
}

TEST_CASE("gwr rejects an adaptive neighbor count of the full sample") {
  ModelFrame frame = heterogeneous_frame(3, 4, 5);
  CHECK_THROWS_AS(
      gwr_aicc(frame, {KernelKind::bisquare, static_cast<double>(frame.n()), true}, 1),
      NumericError);
}
