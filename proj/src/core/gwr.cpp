#include "core/gwr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "core/errors.hpp"
#include "core/geo.hpp"

namespace spatfuse {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd pairwise_distances(const std::vector<GeoPoint>& pts) {
  int n = static_cast<int>(pts.size());
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double v = haversine_miles(pts[static_cast<std::size_t>(i)],
                                 pts[static_cast<std::size_t>(j)]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double row_bandwidth(const Eigen::VectorXd& d, const KernelSpec& spec) {
  if (!spec.adaptive) return spec.bandwidth;
  int k = static_cast<int>(std::llround(spec.bandwidth));
  std::vector<double> tmp(d.data(), d.data() + d.size());
  std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end());
  return tmp[static_cast<std::size_t>(k - 1)];
}

double kernel_value(double d, double h, KernelKind kind) {
  if (kind == KernelKind::gaussian) {
    double u = d / h;
    return std::exp(-0.5 * u * u);
  }
  if (d >= h) return 0.0;
  double u = 1.0 - (d / h) * (d / h);
  return u * u;
}

enum class LocalStatus : char { ok = 0, singular = 1, collapsed = 2 };

// Per-zone weighted least squares pass. The light variant fills only the
// quantities the corrected AIC needs (residuals and hat-matrix diagonal).
struct GwrPass {
  Eigen::VectorXd resid;
  Eigen::VectorXd s_diag;
  Eigen::VectorXd row_norm2;     // squared norms of hat-matrix rows
  Eigen::MatrixXd beta;
  Eigen::MatrixXd c2;            // diag of C C' per zone, before sigma^2
  std::vector<LocalStatus> status;
};

GwrPass run_gwr_pass(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                     const Eigen::MatrixXd& dist, const KernelSpec& spec,
                     int threads, bool full) {
  int n = static_cast<int>(z.rows());
  int k = static_cast<int>(z.cols());
  GwrPass pass;
  pass.resid.resize(n);
  pass.s_diag.resize(n);
  pass.status.assign(static_cast<std::size_t>(n), LocalStatus::ok);
  if (full) {
    pass.row_norm2.resize(n);
    pass.beta.resize(n, k);
    pass.c2.resize(n, k);
  }
  parallel_for_each(0, n, threads, [&](int i) {
    Eigen::VectorXd d = dist.row(i);
    double h = row_bandwidth(d, spec);
    if (!(h > 0.0)) {
      pass.status[static_cast<std::size_t>(i)] = LocalStatus::collapsed;
      return;
    }
    Eigen::VectorXd kappa(n);
    for (int j = 0; j < n; ++j) kappa(j) = kernel_value(d(j), h, spec.kind);
    Eigen::MatrixXd zkz = z.transpose() * kappa.asDiagonal() * z;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(zkz);
    if (!lu.isInvertible()) {
      pass.status[static_cast<std::size_t>(i)] = LocalStatus::singular;
      return;
    }
    Eigen::MatrixXd m = lu.inverse();
    Eigen::VectorXd zky = z.transpose() * (kappa.asDiagonal() * y);
    Eigen::VectorXd beta = m * zky;
    Eigen::RowVectorXd zi = z.row(i);
    pass.resid(i) = y(i) - zi.dot(beta);
    Eigen::VectorXd v = m * zi.transpose();
    pass.s_diag(i) = kappa(i) * zi.dot(v);
    if (full) {
      pass.beta.row(i) = beta.transpose();
      Eigen::VectorXd u = z * v;
      double rn = 0.0;
      for (int j = 0; j < n; ++j) {
        double e = kappa(j) * u(j);
        rn += e * e;
      }
      pass.row_norm2(i) = rn;
      Eigen::MatrixXd g = z * m;  // row j holds z_j' M
      for (int t = 0; t < k; ++t) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          double e = kappa(j) * g(j, t);
          acc += e * e;
        }
        pass.c2(i, t) = acc;
      }
    }
  });
  return pass;
}

double aicc_from_pass(const GwrPass& pass, int n) {
  for (LocalStatus s : pass.status) {
    if (s != LocalStatus::ok) return kInf;
  }
  double rss = pass.resid.squaredNorm();
  double trace_s = pass.s_diag.sum();
  double denom = static_cast<double>(n) - 2.0 - trace_s;
  if (!(denom > 0.0) || !(rss > 0.0)) return kInf;
  return n * std::log(rss / n) + n * kLogTwoPi +
         n * (n + trace_s) / denom;
}

double aicc_with_distances(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& dist, const KernelSpec& spec,
                           int threads) {
  GwrPass pass = run_gwr_pass(z, y, dist, spec, threads, false);
  return aicc_from_pass(pass, static_cast<int>(z.rows()));
}

Eigen::MatrixXd design_matrix(const ModelFrame& frame) {
  Eigen::MatrixXd z(frame.n(), frame.p() + 1);
  z.col(0).setOnes();
  z.rightCols(frame.p()) = frame.X;
  return z;
}

std::vector<std::string> term_names_for(const ModelFrame& frame) {
  std::vector<std::string> names;
  names.reserve(frame.column_names.size() + 1);
  names.emplace_back("(Intercept)");
  for (const auto& c : frame.column_names) names.push_back(c);
  return names;
}

void require_centroids(const ModelFrame& frame) {
  if (static_cast<int>(frame.centroids.size()) != frame.n()) {
    throw DataError("gwr requires one centroid per zone; have " +
                    std::to_string(frame.centroids.size()) + " for " +
                    std::to_string(frame.n()) + " zones");
  }
}

}  // namespace

Eigen::VectorXd GwrResult::mean_beta() const {
  return local_beta.colwise().mean();
}

Eigen::VectorXd GwrResult::mean_std_error() const {
  return local_std_errors.colwise().mean();
}

double gwr_aicc(const ModelFrame& frame, const KernelSpec& spec, int threads) {
  validate_frame(frame);
  require_centroids(frame);
  validate_kernel_spec(spec, frame.n());
  Eigen::MatrixXd z = design_matrix(frame);
  Eigen::MatrixXd dist = pairwise_distances(frame.centroids);
  return aicc_with_distances(z, frame.y, dist, spec, threads);
}

KernelSpec select_bandwidth(const ModelFrame& frame, KernelKind kind,
                            bool adaptive, int threads,
                            WarningLog* warnings) {
  validate_frame(frame);
  require_centroids(frame);
  int n = frame.n(), p = frame.p();
  Eigen::MatrixXd z = design_matrix(frame);
  Eigen::MatrixXd dist = pairwise_distances(frame.centroids);

  if (adaptive) {
    int lo = p + 2, hi = n - 1;
    if (lo > hi) {
      throw NumericError(
          "select_bandwidth: too few zones for adaptive bandwidth search");
    }
    std::map<int, double> cache;
    auto eval = [&](int k) {
      auto it = cache.find(k);
      if (it != cache.end()) return it->second;
      double v = aicc_with_distances(
          z, frame.y, dist, {kind, static_cast<double>(k), true}, threads);
      cache.emplace(k, v);
      return v;
    };
    // Narrow wide ranges with coarse scans, then finish exhaustively.
    while (hi - lo + 1 > 256) {
      std::vector<int> cand;
      for (int t = 0; t <= 32; ++t) {
        int c = lo + static_cast<int>(
                         std::llround(t * static_cast<double>(hi - lo) / 32.0));
        if (cand.empty() || cand.back() != c) cand.push_back(c);
      }
      std::size_t best = 0;
      for (std::size_t t = 1; t < cand.size(); ++t) {
        if (eval(cand[t]) < eval(cand[best])) best = t;
      }
      if (!std::isfinite(eval(cand[best]))) {
        throw NumericError(
            "select_bandwidth: corrected AIC undefined across the scanned "
            "bandwidths");
      }
      lo = cand[best > 0 ? best - 1 : 0];
      hi = cand[std::min(best + 1, cand.size() - 1)];
    }
    int best_k = lo;
    double best_v = eval(lo);
    for (int k = lo + 1; k <= hi; ++k) {
      double v = eval(k);
      if (v < best_v) {
        best_v = v;
        best_k = k;
      }
    }
    if (!std::isfinite(best_v)) {
      throw NumericError(
          "select_bandwidth: corrected AIC undefined for every candidate "
          "bandwidth");
    }
    if (warnings && (best_k == p + 2 || best_k == n - 1)) {
      warnings->add("select_bandwidth: adaptive bandwidth search selected a "
                    "boundary value of " + std::to_string(best_k));
    }
    return {kind, static_cast<double>(best_k), true};
  }

  double dmin = kInf, dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = dist(i, j);
      if (d > 0.0) dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  if (!(dmax > 0.0) || !std::isfinite(dmin)) {
    throw NumericError(
        "select_bandwidth: centroids are coincident; no usable fixed "
        "bandwidth range");
  }
  auto objective = [&](double h) {
    return -aicc_with_distances(z, frame.y, dist, {kind, h, false}, threads);
  };
  OptimumResult r =
      scan_golden_max(objective, dmin, dmax, 32, (dmax - dmin) * 1e-6 + 1e-9);
  if (!std::isfinite(r.value)) {
    throw NumericError(
        "select_bandwidth: corrected AIC undefined for every candidate "
        "bandwidth");
  }
  if (warnings && (r.x - dmin < (dmax - dmin) * 1e-4 ||
                   dmax - r.x < (dmax - dmin) * 1e-4)) {
    warnings->add(
        "select_bandwidth: fixed bandwidth search selected a boundary value");
  }
  return {kind, r.x, false};
}

GwrResult fit_gwr(const ModelFrame& frame, const KernelSpec& spec,
                  int threads) {
  validate_frame(frame);
  require_centroids(frame);
  validate_kernel_spec(spec, frame.n());
  int n = frame.n(), k = frame.p() + 1;
  Eigen::MatrixXd z = design_matrix(frame);
  Eigen::MatrixXd dist = pairwise_distances(frame.centroids);
  GwrPass pass = run_gwr_pass(z, frame.y, dist, spec, threads, true);
  for (int i = 0; i < n; ++i) {
    LocalStatus s = pass.status[static_cast<std::size_t>(i)];
    if (s == LocalStatus::singular) {
      throw NumericError("gwr: local design at zone '" +
                         frame.zone_ids[static_cast<std::size_t>(i)] +
                         "' is singular; increase the bandwidth");
    }
    if (s == LocalStatus::collapsed) {
      throw NumericError(
          "gwr: adaptive bandwidth collapsed to zero distance at zone '" +
          frame.zone_ids[static_cast<std::size_t>(i)] +
          "'; centroids there are coincident");
    }
  }

  double rss = pass.resid.squaredNorm();
  double trace_s = pass.s_diag.sum();
  double trace_sts = pass.row_norm2.sum();
  double delta1 = n - 2.0 * trace_s + trace_sts;

  GwrResult res;
  res.kernel = spec;
  res.term_names = term_names_for(frame);
  res.local_beta = std::move(pass.beta);
  res.effective_parameters = trace_s;
  res.trace_sts = trace_sts;
  res.sigma2 = delta1 > 0.0 ? rss / delta1
                            : std::numeric_limits<double>::quiet_NaN();
  res.local_std_errors.resize(n, k);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < k; ++t) {
      res.local_std_errors(i, t) = std::sqrt(res.sigma2 * pass.c2(i, t));
    }
  }
  res.log_likelihood =
      -0.5 * n * (kLogTwoPi + std::log(std::max(rss / n, 1e-300)) + 1.0);
  res.aic = aicc_from_pass(pass, n);
  double tss = (frame.y.array() - frame.y.mean()).square().sum();
  if (tss > 0.0 && delta1 > 1.0) {
    double r2 = 1.0 - rss / tss;
    res.adjusted_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / (delta1 - 1.0);
  } else {
    res.adjusted_r2 = std::numeric_limits<double>::quiet_NaN();
  }
  res.residuals = std::move(pass.resid);
  return res;
}

GwrResult fit_gwr_auto(const ModelFrame& frame, const GwrSettings& settings,
                       int threads, WarningLog* warnings) {
  KernelSpec spec{settings.kernel, settings.bandwidth, settings.adaptive};
  bool selected = false;
  if (settings.bandwidth == 0.0) {
    spec = select_bandwidth(frame, settings.kernel, settings.adaptive, threads,
                            warnings);
    selected = true;
  }
  GwrResult res = fit_gwr(frame, spec, threads);
  res.bandwidth_selected = selected;
  return res;
}

double gwr_predict_at(const ModelFrame& frame, const KernelSpec& spec,
                      const GeoPoint& location,
                      const Eigen::RowVectorXd& x_new) {
  validate_frame(frame);
  require_centroids(frame);
  validate_kernel_spec(spec, frame.n());
  if (x_new.size() != frame.p()) {
    throw NumericError("gwr_predict_at: " + std::to_string(x_new.size()) +
                       " predictor values do not match " +
                       std::to_string(frame.p()) + " frame columns");
  }
  int n = frame.n();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    d(i) = haversine_miles(location, frame.centroids[static_cast<std::size_t>(i)]);
  }
  double h = row_bandwidth(d, spec);
  if (!(h > 0.0)) {
    throw NumericError(
        "gwr_predict_at: adaptive bandwidth collapsed to zero distance at "
        "the prediction location");
  }
  Eigen::MatrixXd z = design_matrix(frame);
  Eigen::VectorXd kappa(n);
  for (int j = 0; j < n; ++j) kappa(j) = kernel_value(d(j), h, spec.kind);
  Eigen::MatrixXd zkz = z.transpose() * kappa.asDiagonal() * z;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(zkz);
  if (!lu.isInvertible()) {
    throw NumericError(
        "gwr_predict_at: local design at the prediction location is "
        "singular; increase the bandwidth");
  }
  Eigen::VectorXd beta =
      lu.inverse() * (z.transpose() * (kappa.asDiagonal() * frame.y));
  return beta(0) + x_new.dot(beta.tail(beta.size() - 1));
}

}  // namespace spatfuse
