#include "core/transforms.hpp"

#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace spatfuse {

std::vector<double> boxcox(const std::vector<double>& y,
                           const BoxCoxSpec& spec) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double v = y[i] + spec.offset;
    if (!(v > 0.0)) {
      throw NumericError("boxcox: value at index " + std::to_string(i) +
                         " is nonpositive after offset (" + std::to_string(v) +
                         ")");
    }
    if (spec.lambda == 0.0) {
      out[i] = std::log(v);
    } else {
      out[i] = (std::pow(v, spec.lambda) - 1.0) / spec.lambda;
    }
  }
  return out;
}

Eigen::VectorXd boxcox(const Eigen::VectorXd& y, const BoxCoxSpec& spec) {
  std::vector<double> in(y.data(), y.data() + y.size());
  std::vector<double> out = boxcox(in, spec);
  return Eigen::Map<Eigen::VectorXd>(out.data(),
                                     static_cast<Eigen::Index>(out.size()));
}

namespace {

// Profile log-likelihood: Gaussian likelihood of the transformed data with
// the ML variance profiled out, plus the Jacobian term.
double boxcox_profile(const std::vector<double>& y, double offset,
                      double lambda, const std::vector<double>& log_shifted) {
  std::size_t n = y.size();
  BoxCoxSpec spec{lambda, offset};
  std::vector<double> t = boxcox(y, spec);
  double mean = 0.0;
  for (double v : t) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : t) ss += (v - mean) * (v - mean);
  double sigma2 = ss / static_cast<double>(n);
  if (!(sigma2 > 0.0)) return -std::numeric_limits<double>::infinity();
  double jac = 0.0;
  for (double lv : log_shifted) jac += lv;
  return -0.5 * static_cast<double>(n) * std::log(sigma2) +
         (lambda - 1.0) * jac;
}

}  // namespace

double boxcox_mle(const std::vector<double>& y, double offset,
                  WarningLog* warnings) {
  if (y.size() < 3) {
    throw NumericError("boxcox_mle: need at least 3 observations");
  }
  std::vector<double> log_shifted(y.size());
  double lo_val = std::numeric_limits<double>::infinity();
  double hi_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < y.size(); ++i) {
    double v = y[i] + offset;
    if (!(v > 0.0)) {
      throw NumericError("boxcox_mle: value at index " + std::to_string(i) +
                         " is nonpositive after offset");
    }
    log_shifted[i] = std::log(v);
    lo_val = std::min(lo_val, v);
    hi_val = std::max(hi_val, v);
  }
  if (hi_val - lo_val < 1e-300) {
    throw NumericError("boxcox_mle: constant input, likelihood is flat");
  }
  auto obj = [&](double lambda) {
    return boxcox_profile(y, offset, lambda, log_shifted);
  };
  OptimumResult r = scan_golden_max(obj, -2.0, 2.0, 41, 1e-6);
  if (warnings && (r.x < -2.0 + 1e-3 || r.x > 2.0 - 1e-3)) {
    warnings->add("boxcox_mle: lambda estimate " + std::to_string(r.x) +
                  " is at the search boundary [-2, 2]");
  }
  return r.x;
}

double boxcox_mle(const Eigen::VectorXd& y, double offset,
                  WarningLog* warnings) {
  std::vector<double> in(y.data(), y.data() + y.size());
  return boxcox_mle(in, offset, warnings);
}

std::pair<Eigen::MatrixXd, StandardizationParams> zscore(
    const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  Eigen::Index n = x.rows(), p = x.cols();
  if (n < 2) throw NumericError("zscore: need at least 2 rows");
  StandardizationParams params;
  params.names.resize(static_cast<std::size_t>(p));
  params.mean.resize(static_cast<std::size_t>(p));
  params.sd.resize(static_cast<std::size_t>(p));
  Eigen::MatrixXd out(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    std::string name = j < static_cast<Eigen::Index>(names.size())
                           ? names[static_cast<std::size_t>(j)]
                           : "column " + std::to_string(j);
    double mean = x.col(j).mean();
    double ss = (x.col(j).array() - mean).square().sum();
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw NumericError("zscore: column '" + name + "' is constant");
    }
    out.col(j) = (x.col(j).array() - mean) / sd;
    params.names[static_cast<std::size_t>(j)] = name;
    params.mean[static_cast<std::size_t>(j)] = mean;
    params.sd[static_cast<std::size_t>(j)] = sd;
  }
  return {out, params};
}

Eigen::MatrixXd unstandardize(const Eigen::MatrixXd& x,
                              const StandardizationParams& params) {
  if (static_cast<std::size_t>(x.cols()) != params.sd.size()) {
    throw NumericError("unstandardize: column count mismatch");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out.col(j) = x.col(j).array() * params.sd[static_cast<std::size_t>(j)] +
                 params.mean[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace spatfuse
