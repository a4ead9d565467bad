#include "core/estimators.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <sstream>

#include "core/errors.hpp"

namespace spatfuse {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // ln(2*pi)

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

// Least squares with a rank check; names a dependent column on failure.
Eigen::VectorXd solve_full_rank(const Eigen::MatrixXd& z,
                                const Eigen::VectorXd& rhs,
                                const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < z.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    int dependent = perm(z.cols() - 1);
    throw NumericError("design matrix is rank deficient; column '" +
                       names[static_cast<std::size_t>(dependent)] +
                       "' is linearly dependent on the others");
  }
  return qr.solve(rhs);
}

double guarded_log(double v) {
  return std::log(std::max(v, 1e-300));
}

// Central-difference Hessian with per-coordinate steps.
Eigen::MatrixXd central_hessian(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  int d = static_cast<int>(x.size());
  Eigen::MatrixXd h(d, d);
  double f0 = f(x);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += steps(i);
    xm(i) -= steps(i);
    h(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (steps(i) * steps(i));
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += steps(i);
      xpp(j) += steps(j);
      xpm(i) += steps(i);
      xpm(j) -= steps(j);
      xmp(i) -= steps(i);
      xmp(j) += steps(j);
      xmm(i) -= steps(i);
      xmm(j) -= steps(j);
      h(i, j) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) /
                (4.0 * steps(i) * steps(j));
      h(j, i) = h(i, j);
    }
  }
  return h;
}

// Standard errors from the negated inverse Hessian of the full
// log-likelihood. Returns an empty vector when the Hessian is not usable.
Eigen::VectorXd hessian_std_errors(
    const std::function<double(const Eigen::VectorXd&)>& loglik,
    const Eigen::VectorXd& at, const Eigen::VectorXd& steps) {
  Eigen::MatrixXd h = central_hessian(loglik, at, steps);
  if (!h.allFinite()) return {};
  Eigen::MatrixXd neg = -h;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(neg);
  if (!lu.isInvertible()) return {};
  Eigen::MatrixXd cov = lu.inverse();
  Eigen::VectorXd se(at.size());
  for (int i = 0; i < at.size(); ++i) {
    se(i) = cov(i, i) > 0.0 ? std::sqrt(cov(i, i))
                            : std::numeric_limits<double>::quiet_NaN();
  }
  return se;
}

double adjusted_r_squared(double rss, const Eigen::VectorXd& y, int p) {
  int n = static_cast<int>(y.size());
  double tss = (y.array() - y.mean()).square().sum();
  if (tss <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double r2 = 1.0 - rss / tss;
  return 1.0 - (1.0 - r2) * static_cast<double>(n - 1) /
                   static_cast<double>(n - p - 1);
}

struct ProfileOptimum {
  double x;
  double value;
};

// Coarse scan plus golden-section refinement; rejects when no finite
// maximum is found, attaching a short profile trace.
ProfileOptimum maximize_profile(const std::function<double(double)>& profile,
                                double lo, double hi, const char* what) {
  OptimumResult r = scan_golden_max(profile, lo, hi, 64, 1e-8);
  if (!std::isfinite(r.value)) {
    std::ostringstream trace;
    trace << what << ": failed to bracket a likelihood maximum on [" << lo
          << ", " << hi << "]; profile trace:";
    for (int i = 0; i <= 20; ++i) {
      double x = lo + (hi - lo) * i / 20.0;
      trace << " (" << x << ", " << profile(x) << ")";
    }
    throw NumericError(trace.str());
  }
  return {r.x, r.value};
}

void check_weight_compat(const ModelFrame& frame, const WeightMatrix& w,
                         WarningLog* warnings, const char* what) {
  if (w.n != frame.n()) {
    throw NumericError(std::string(what) + ": weight matrix dimension " +
                       std::to_string(w.n) + " does not match frame rows " +
                       std::to_string(frame.n()));
  }
  if (!w.standardized && warnings) {
    warnings->add(std::string(what) +
                  ": weights are binary; estimation normally uses "
                  "row-standardized weights");
  }
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ols: return "ols";
    case ModelKind::spatial_lag: return "spatial_lag";
    case ModelKind::spatial_error: return "spatial_error";
    case ModelKind::gwr: return "gwr";
  }
  return "unknown";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "ols") return ModelKind::ols;
  if (name == "spatial_lag" || name == "slm") return ModelKind::spatial_lag;
  if (name == "spatial_error" || name == "sem") return ModelKind::spatial_error;
  if (name == "gwr") return ModelKind::gwr;
  throw ConfigError("unknown model kind '" + name + "'");
}

double LogDetSystem::operator()(double rho) const {
  double s = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    double v = 1.0 - rho * eigenvalues(i);
    if (v <= 0.0) return -std::numeric_limits<double>::infinity();
    s += std::log(v);
  }
  return s;
}

LogDetSystem log_det_system(const WeightMatrix& w) {
  Eigen::MatrixXd s(w.n, w.n);
  s.setZero();
  if (w.standardized) {
    // W = D^{-1}C with symmetric binary C; the similar symmetric matrix has
    // entries sqrt(w_ij * w_ji).
    for (int i = 0; i < w.n; ++i) {
      for (const auto& [j, wij] : w.rows[static_cast<std::size_t>(i)]) {
        if (j < i) continue;
        double wji = w.at(j, i);
        double v = std::sqrt(std::max(wij, 0.0) * std::max(wji, 0.0));
        s(i, j) = v;
        s(j, i) = v;
      }
    }
  } else {
    Eigen::MatrixXd d = w.dense();
    if (!d.isApprox(d.transpose(), 1e-10)) {
      throw NumericError(
          "log_det_system: weights must be row-standardized or symmetric");
    }
    s = d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) {
    throw NumericError("log_det_system: eigensolver failed to converge");
  }
  LogDetSystem sys;
  sys.eigenvalues = es.eigenvalues();
  double wmin = sys.eigenvalues.minCoeff();
  double wmax = sys.eigenvalues.maxCoeff();
  sys.rho_lo = wmin < -1e-10 ? 1.0 / wmin : -1.0;
  sys.rho_hi = wmax > 1e-10 ? 1.0 / wmax : 1.0;
  return sys;
}

FitResult fit_ols(const ModelFrame& frame) {
  validate_frame(frame);
  int n = frame.n(), p = frame.p(), k = p + 1;
  Eigen::MatrixXd z = design_matrix(frame);
  std::vector<std::string> names = term_names_for(frame);
  Eigen::VectorXd beta = solve_full_rank(z, frame.y, names);
  Eigen::VectorXd resid = frame.y - z * beta;
  double rss = resid.squaredNorm();
  double sigma2_ml = rss / n;
  double ll = -0.5 * n * (kLogTwoPi + guarded_log(sigma2_ml) + 1.0);

  Eigen::MatrixXd ztz_inv =
      (z.transpose() * z).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  double sigma2_unbiased = rss / (n - k);
  Eigen::VectorXd se(k);
  for (int j = 0; j < k; ++j) {
    se(j) = std::sqrt(sigma2_unbiased * ztz_inv(j, j));
  }

  FitResult fit;
  fit.model_kind = ModelKind::ols;
  fit.term_names = std::move(names);
  fit.beta = std::move(beta);
  fit.std_errors = std::move(se);
  fit.sigma2 = sigma2_ml;
  fit.log_likelihood = ll;
  fit.param_count = k + 1;  // coefficients + error variance
  fit.aic = 2.0 * fit.param_count - 2.0 * ll;
  fit.adjusted_r2 = adjusted_r_squared(rss, frame.y, p);
  fit.residuals = std::move(resid);
  fit.converged = true;
  return fit;
}

SlmProfile::SlmProfile(const ModelFrame& frame, const WeightMatrix& w,
                       const LogDetSystem& logdet)
    : n_(frame.n()), logdet_(logdet) {
  Eigen::MatrixXd z = design_matrix(frame);
  std::vector<std::string> names = term_names_for(frame);
  Eigen::VectorXd wy = spatial_lag_vector(w, frame.y);
  Eigen::VectorXd e0 = frame.y - z * solve_full_rank(z, frame.y, names);
  Eigen::VectorXd el = wy - z * solve_full_rank(z, wy, names);
  e00_ = e0.squaredNorm();
  e0l_ = e0.dot(el);
  ell_ = el.squaredNorm();
  lo_ = logdet.rho_lo + 1e-6;
  hi_ = logdet.rho_hi - 1e-6;
}

double SlmProfile::sse(double rho) const {
  return e00_ - 2.0 * rho * e0l_ + rho * rho * ell_;
}

double SlmProfile::operator()(double rho) const {
  double s = sse(rho);
  if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
  double ld = logdet_(rho);
  if (!std::isfinite(ld)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n_ * (kLogTwoPi + 1.0) + ld - 0.5 * n_ * std::log(s / n_);
}

SemProfile::SemProfile(const ModelFrame& frame, const WeightMatrix& w,
                       const LogDetSystem& logdet)
    : n_(frame.n()), logdet_(logdet) {
  z_ = design_matrix(frame);
  y_ = frame.y;
  wy_ = spatial_lag_vector(w, frame.y);
  wz_.resize(n_, z_.cols());
  for (int j = 0; j < z_.cols(); ++j) {
    wz_.col(j) = spatial_lag_vector(w, Eigen::VectorXd(z_.col(j)));
  }
  lo_ = logdet.rho_lo + 1e-6;
  hi_ = logdet.rho_hi - 1e-6;
}

Eigen::VectorXd SemProfile::beta_at(double lambda) const {
  Eigen::MatrixXd az = z_ - lambda * wz_;
  Eigen::VectorXd ay = y_ - lambda * wy_;
  return az.colPivHouseholderQr().solve(ay);
}

double SemProfile::sse_at(double lambda) const {
  Eigen::MatrixXd az = z_ - lambda * wz_;
  Eigen::VectorXd ay = y_ - lambda * wy_;
  Eigen::VectorXd beta = az.colPivHouseholderQr().solve(ay);
  return (ay - az * beta).squaredNorm();
}

double SemProfile::operator()(double lambda) const {
  double s = sse_at(lambda);
  if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
  double ld = logdet_(lambda);
  if (!std::isfinite(ld)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n_ * (kLogTwoPi + 1.0) + ld - 0.5 * n_ * std::log(s / n_);
}

namespace {

// Step sizes for the numerical Hessian: relative 1e-5 with an absolute
// floor of 1e-7; the spatial parameter's step is kept inside the domain.
Eigen::VectorXd hessian_steps(const Eigen::VectorXd& at, double lo, double hi) {
  Eigen::VectorXd steps(at.size());
  for (int i = 0; i < at.size(); ++i) {
    steps(i) = std::max(1e-5 * std::fabs(at(i)), 1e-7);
  }
  double margin = std::min(at(0) - lo, hi - at(0));
  if (margin > 0.0) steps(0) = std::min(steps(0), margin / 4.0);
  return steps;
}

}  // namespace

FitResult fit_spatial_lag(const ModelFrame& frame, const WeightMatrix& w,
                          WarningLog* warnings,
                          const LogDetSystem* precomputed) {
  validate_frame(frame);
  check_weight_compat(frame, w, warnings, "fit_spatial_lag");
  int n = frame.n(), p = frame.p();
  LogDetSystem logdet = precomputed ? *precomputed : log_det_system(w);
  SlmProfile profile(frame, w, logdet);
  ProfileOptimum opt = maximize_profile(
      [&](double r) { return profile(r); }, profile.lo(), profile.hi(),
      "fit_spatial_lag");
  double rho = opt.x;

  Eigen::MatrixXd z = design_matrix(frame);
  std::vector<std::string> names = term_names_for(frame);
  Eigen::VectorXd wy = spatial_lag_vector(w, frame.y);
  Eigen::VectorXd filtered = frame.y - rho * wy;
  Eigen::VectorXd beta = solve_full_rank(z, filtered, names);
  Eigen::VectorXd resid = filtered - z * beta;
  double rss = resid.squaredNorm();
  double sigma2 = rss / n;

  // Full log-likelihood in (rho, beta, sigma2) for the standard errors.
  auto full_ll = [&](const Eigen::VectorXd& theta) {
    double r = theta(0);
    double s2 = theta(p + 2);
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    double ld = logdet(r);
    if (!std::isfinite(ld)) return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd b = theta.segment(1, p + 1);
    Eigen::VectorXd e = frame.y - r * wy - z * b;
    return -0.5 * n * (kLogTwoPi + std::log(s2)) + ld -
           e.squaredNorm() / (2.0 * s2);
  };
  Eigen::VectorXd theta(p + 3);
  theta(0) = rho;
  theta.segment(1, p + 1) = beta;
  theta(p + 2) = sigma2;
  Eigen::VectorXd se_all = hessian_std_errors(
      full_ll, theta, hessian_steps(theta, profile.lo(), profile.hi()));

  FitResult fit;
  fit.model_kind = ModelKind::spatial_lag;
  fit.term_names = std::move(names);
  fit.beta = std::move(beta);
  fit.rho = rho;
  if (se_all.size() == p + 3) {
    fit.rho_std_error = se_all(0);
    fit.std_errors = se_all.segment(1, p + 1);
  } else {
    fit.rho_std_error = std::numeric_limits<double>::quiet_NaN();
    fit.std_errors =
        Eigen::VectorXd::Constant(p + 1, std::numeric_limits<double>::quiet_NaN());
    if (warnings) {
      warnings->add(
          "fit_spatial_lag: likelihood Hessian not invertible; standard "
          "errors unavailable");
    }
  }
  fit.sigma2 = sigma2;
  fit.log_likelihood = opt.value;
  fit.param_count = p + 3;  // coefficients + rho + error variance
  fit.aic = 2.0 * fit.param_count - 2.0 * fit.log_likelihood;
  fit.adjusted_r2 = adjusted_r_squared(rss, frame.y, p);
  fit.residuals = std::move(resid);
  fit.converged = std::isfinite(opt.value);
  return fit;
}

FitResult fit_spatial_error(const ModelFrame& frame, const WeightMatrix& w,
                            WarningLog* warnings,
                            const LogDetSystem* precomputed) {
  validate_frame(frame);
  check_weight_compat(frame, w, warnings, "fit_spatial_error");
  int n = frame.n(), p = frame.p();
  LogDetSystem logdet = precomputed ? *precomputed : log_det_system(w);
  SemProfile profile(frame, w, logdet);
  ProfileOptimum opt = maximize_profile(
      [&](double l) { return profile(l); }, profile.lo(), profile.hi(),
      "fit_spatial_error");
  double lambda = opt.x;

  Eigen::MatrixXd z = design_matrix(frame);
  std::vector<std::string> names = term_names_for(frame);
  Eigen::VectorXd beta = profile.beta_at(lambda);
  double rss_filtered = profile.sse_at(lambda);
  double sigma2 = rss_filtered / n;
  // Response-scale residuals: observed minus the trend fit.
  Eigen::VectorXd resid = frame.y - z * beta;

  Eigen::VectorXd wy = spatial_lag_vector(w, frame.y);
  Eigen::MatrixXd wz(n, p + 1);
  for (int j = 0; j <= p; ++j) {
    wz.col(j) = spatial_lag_vector(w, Eigen::VectorXd(z.col(j)));
  }
  auto full_ll = [&](const Eigen::VectorXd& theta) {
    double l = theta(0);
    double s2 = theta(p + 2);
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    double ld = logdet(l);
    if (!std::isfinite(ld)) return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd b = theta.segment(1, p + 1);
    Eigen::VectorXd e = (frame.y - l * wy) - (z - l * wz) * b;
    return -0.5 * n * (kLogTwoPi + std::log(s2)) + ld -
           e.squaredNorm() / (2.0 * s2);
  };
  Eigen::VectorXd theta(p + 3);
  theta(0) = lambda;
  theta.segment(1, p + 1) = beta;
  theta(p + 2) = sigma2;
  Eigen::VectorXd se_all = hessian_std_errors(
      full_ll, theta, hessian_steps(theta, profile.lo(), profile.hi()));

  FitResult fit;
  fit.model_kind = ModelKind::spatial_error;
  fit.term_names = std::move(names);
  fit.beta = std::move(beta);
  fit.rho = lambda;
  if (se_all.size() == p + 3) {
    fit.rho_std_error = se_all(0);
    fit.std_errors = se_all.segment(1, p + 1);
  } else {
    fit.rho_std_error = std::numeric_limits<double>::quiet_NaN();
    fit.std_errors =
        Eigen::VectorXd::Constant(p + 1, std::numeric_limits<double>::quiet_NaN());
    if (warnings) {
      warnings->add(
          "fit_spatial_error: likelihood Hessian not invertible; standard "
          "errors unavailable");
    }
  }
  fit.sigma2 = sigma2;
  fit.log_likelihood = opt.value;
  fit.param_count = p + 3;
  fit.aic = 2.0 * fit.param_count - 2.0 * fit.log_likelihood;
  fit.adjusted_r2 = adjusted_r_squared(resid.squaredNorm(), frame.y, p);
  fit.residuals = std::move(resid);
  fit.converged = std::isfinite(opt.value);
  return fit;
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& x_new) {
  if (x_new.cols() + 1 != fit.beta.size()) {
    throw NumericError("predict: " + std::to_string(x_new.cols()) +
                       " predictor columns do not match " +
                       std::to_string(fit.beta.size() - 1) +
                       " fitted coefficients");
  }
  return Eigen::VectorXd::Constant(x_new.rows(), fit.beta(0)) +
         x_new * fit.beta.tail(fit.beta.size() - 1);
}

}  // namespace spatfuse
