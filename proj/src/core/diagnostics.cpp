#include "core/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/errors.hpp"
#include "core/gwr.hpp"

namespace spatfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double moran_statistic(const WeightMatrix& w, const Eigen::VectorXd& z,
                       double s0, double zz) {
  double cross = 0.0;
  for (int i = 0; i < w.n; ++i) {
    double lag = 0.0;
    for (const auto& [j, wij] : w.rows[static_cast<std::size_t>(i)]) {
      lag += wij * z(j);
    }
    cross += z(i) * lag;
  }
  return (w.n / s0) * cross / zz;
}

}  // namespace

MoranResult morans_i(const Eigen::VectorXd& values, const WeightMatrix& w,
                     int permutations, std::uint64_t seed, int threads) {
  int n = w.n;
  if (static_cast<int>(values.size()) != n) {
    throw NumericError("morans_i: value count " +
                       std::to_string(values.size()) +
                       " does not match weight dimension " + std::to_string(n));
  }
  if (permutations < 0) {
    throw ConfigError("morans_i: permutation count must be nonnegative");
  }
  if (!values.allFinite()) {
    throw NumericError("morans_i: values contain non-finite entries");
  }
  double s0 = w.total_weight();
  if (!(s0 > 0.0)) {
    throw NumericError("morans_i: weight matrix has no edges");
  }
  Eigen::VectorXd z = values.array() - values.mean();
  double zz = z.squaredNorm();
  if (!(zz > 0.0)) {
    throw NumericError("morans_i: values are constant");
  }

  MoranResult res;
  res.i = moran_statistic(w, z, s0, zz);
  res.expected = -1.0 / (n - 1);
  res.permutations = permutations;

  // Randomization-assumption moments; undefined below four observations.
  if (n >= 4) {
    double s1 = 0.0;
    std::vector<double> col_sums(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (const auto& [j, wij] : w.rows[static_cast<std::size_t>(i)]) {
        double wji = w.at(j, i);
        s1 += 0.5 * (wij + wji) * (wij + wji);
        col_sums[static_cast<std::size_t>(j)] += wij;
      }
    }
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double rc = w.row_sum(i) + col_sums[static_cast<std::size_t>(i)];
      s2 += rc * rc;
    }
    double m2 = zz / n;
    double m4 = z.array().pow(4).sum() / n;
    double b2 = m4 / (m2 * m2);
    double nn = n;
    double num = nn * ((nn * nn - 3.0 * nn + 3.0) * s1 - nn * s2 +
                       3.0 * s0 * s0) -
                 b2 * ((nn * nn - nn) * s1 - 2.0 * nn * s2 + 6.0 * s0 * s0);
    double den = (nn - 1.0) * (nn - 2.0) * (nn - 3.0) * s0 * s0;
    res.variance = num / den - res.expected * res.expected;
    res.z_score = (res.i - res.expected) /
                  std::sqrt(std::max(res.variance, 1e-300));
    res.p_normal = two_sided_normal_p(res.z_score);
  } else {
    res.variance = kNaN;
    res.z_score = kNaN;
    res.p_normal = kNaN;
  }

  if (permutations == 0) {
    res.p_permutation = kNaN;
    return res;
  }
  std::vector<char> hits(static_cast<std::size_t>(permutations), 0);
  double observed_dev = std::fabs(res.i - res.expected);
  std::vector<double> base(z.data(), z.data() + n);
  parallel_for_each(0, permutations, threads, [&](int t) {
    std::vector<double> zp = base;
    deterministic_shuffle(zp, derive_seed(seed, static_cast<std::uint64_t>(t)));
    Eigen::Map<Eigen::VectorXd> zpv(zp.data(), n);
    double ip = moran_statistic(w, zpv, s0, zz);
    if (std::fabs(ip - res.expected) >= observed_dev - 1e-15) {
      hits[static_cast<std::size_t>(t)] = 1;
    }
  });
  int count = std::accumulate(hits.begin(), hits.end(), 0);
  res.p_permutation = (1.0 + count) / (1.0 + permutations);
  return res;
}

VifResult vif(const ModelFrame& frame) {
  validate_frame(frame);
  int n = frame.n(), p = frame.p();
  VifResult res;
  res.names = frame.column_names;
  res.values.resize(p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd target = frame.X.col(j);
    double tss = (target.array() - target.mean()).square().sum();
    if (!(tss > 0.0)) {
      throw NumericError("vif: column '" +
                         frame.column_names[static_cast<std::size_t>(j)] +
                         "' is constant");
    }
    Eigen::MatrixXd z(n, p);
    z.col(0).setOnes();
    int col = 1;
    for (int t = 0; t < p; ++t) {
      if (t == j) continue;
      z.col(col++) = frame.X.col(t);
    }
    Eigen::VectorXd beta = z.colPivHouseholderQr().solve(target);
    double rss = (target - z * beta).squaredNorm();
    double r2 = 1.0 - rss / tss;
    res.values(j) = r2 >= 1.0 - 1e-14
                        ? std::numeric_limits<double>::infinity()
                        : 1.0 / (1.0 - r2);
  }
  return res;
}

namespace {

Eigen::VectorXd trend_predictions(const FitResult& fit,
                                  const Eigen::MatrixXd& x) {
  return predict(fit, x);
}

}  // namespace

CvResult kfold_cv(const ModelFrame& frame, const WeightMatrix& w,
                  ModelKind kind, int k_folds, std::uint64_t seed, int threads,
                  const KernelSpec* gwr_kernel, WarningLog* warnings) {
  validate_frame(frame);
  int n = frame.n();
  if (k_folds < 2 || k_folds > n) {
    throw ConfigError("kfold_cv: fold count must be between 2 and the row "
                      "count; got " + std::to_string(k_folds));
  }
  if (kind == ModelKind::gwr && gwr_kernel == nullptr) {
    throw ConfigError("kfold_cv: gwr cross-validation requires a kernel");
  }
  bool needs_weights =
      kind == ModelKind::spatial_lag || kind == ModelKind::spatial_error;
  if (needs_weights && w.n != n) {
    throw NumericError("kfold_cv: weight matrix dimension does not match the "
                       "frame");
  }

  CvResult res;
  res.model = kind;
  res.folds = k_folds;
  res.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> order = seeded_permutation(n, seed);
  for (int t = 0; t < n; ++t) {
    res.assignments[static_cast<std::size_t>(order[static_cast<std::size_t>(
        t)])] = t % k_folds;
  }

  for (int f = 0; f < k_folds; ++f) {
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < n; ++i) {
      if (res.assignments[static_cast<std::size_t>(i)] == f) {
        test_rows.push_back(i);
      } else {
        train_rows.push_back(i);
      }
    }
    ModelFrame train = subset_rows(frame, train_rows);
    int n_train = static_cast<int>(train_rows.size());

    Eigen::VectorXd train_pred, test_pred;
    Eigen::MatrixXd x_test(static_cast<int>(test_rows.size()), frame.p());
    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      x_test.row(static_cast<int>(t)) = frame.X.row(test_rows[t]);
    }

    if (kind == ModelKind::gwr) {
      KernelSpec spec = *gwr_kernel;
      if (spec.adaptive) {
        int kk = static_cast<int>(std::llround(spec.bandwidth));
        if (kk > n_train - 1) {
          spec.bandwidth = static_cast<double>(n_train - 1);
          if (warnings) {
            warnings->add(
                "kfold_cv: adaptive bandwidth clamped to the training size "
                "in fold " + std::to_string(f));
          }
        }
      }
      GwrResult fit = fit_gwr(train, spec, threads);
      train_pred = train.y - fit.residuals;
      test_pred.resize(static_cast<int>(test_rows.size()));
      for (std::size_t t = 0; t < test_rows.size(); ++t) {
        int row = test_rows[t];
        test_pred(static_cast<int>(t)) = gwr_predict_at(
            train, spec, frame.centroids[static_cast<std::size_t>(row)],
            x_test.row(static_cast<int>(t)));
      }
    } else {
      FitResult fit;
      if (kind == ModelKind::ols) {
        fit = fit_ols(train);
      } else {
        WeightMatrix wt = restrict_weights(w, train_rows, warnings);
        fit = kind == ModelKind::spatial_lag
                  ? fit_spatial_lag(train, wt, warnings)
                  : fit_spatial_error(train, wt, warnings);
      }
      train_pred = trend_predictions(fit, train.X);
      test_pred = trend_predictions(fit, x_test);
    }

    CvFold fold;
    fold.fold = f;
    fold.test_size = static_cast<int>(test_rows.size());
    fold.train_mae = (train.y - train_pred).cwiseAbs().mean();
    double acc = 0.0;
    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      acc += std::fabs(frame.y(test_rows[t]) - test_pred(static_cast<int>(t)));
    }
    fold.test_mae = acc / static_cast<double>(test_rows.size());
    res.fold_results.push_back(fold);
  }

  for (const auto& fold : res.fold_results) {
    res.mean_train_mae += fold.train_mae;
    res.mean_test_mae += fold.test_mae;
  }
  res.mean_train_mae /= k_folds;
  res.mean_test_mae /= k_folds;
  return res;
}

}  // namespace spatfuse
