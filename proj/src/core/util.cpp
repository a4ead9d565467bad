#include "core/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace spatfuse {

void WarningLog::add(const std::string& msg) {
  if (std::find(messages_.begin(), messages_.end(), msg) == messages_.end()) {
    messages_.push_back(msg);
  }
}

void WarningLog::merge(const WarningLog& other) {
  for (const auto& m : other.messages()) add(m);
}

OptimumResult golden_max(const std::function<double(double)>& f, double lo,
                         double hi, double tol) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  static const double invphi2 = (3.0 - std::sqrt(5.0)) / 2.0;
  double a = lo, b = hi;
  double h = b - a;
  int evals = 0;
  double c = a + invphi2 * h;
  double d = a + invphi * h;
  double fc = f(c), fd = f(d);
  evals += 2;
  while (h > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      h = b - a;
      c = a + invphi2 * h;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      h = b - a;
      d = a + invphi * h;
      fd = f(d);
    }
    ++evals;
  }
  OptimumResult r;
  r.x = fc > fd ? c : d;
  r.value = std::max(fc, fd);
  r.evaluations = evals;
  return r;
}

OptimumResult scan_golden_max(const std::function<double(double)>& f, double lo,
                              double hi, int scan_points, double tol) {
  if (scan_points < 3) scan_points = 3;
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  std::vector<double> xs(scan_points), vs(scan_points);
  for (int i = 0; i < scan_points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (scan_points - 1);
    vs[i] = f(xs[i]);
    if (vs[i] > best_v) {
      best_v = vs[i];
      best = i;
    }
  }
  double a = xs[std::max(0, best - 1)];
  double b = xs[std::min(scan_points - 1, best + 1)];
  OptimumResult r = golden_max(f, a, b, tol);
  r.evaluations += scan_points;
  if (best_v > r.value) {
    r.x = xs[best];
    r.value = best_v;
  }
  return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double betacf(double a, double b, double x) {
  const int max_iter = 300;
  const double eps = 3e-14, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta_reg(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double front = std::exp(ln_beta + a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double two_sided_t_p(double t, double df) {
  if (std::isnan(t) || df <= 0) return std::numeric_limits<double>::quiet_NaN();
  double x = df / (df + t * t);
  return incomplete_beta_reg(df / 2.0, 0.5, x);
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x517cc1b727220a95ULL));
}

void deterministic_shuffle(std::vector<int>& v, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

void deterministic_shuffle(std::vector<double>& v, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<int> seeded_permutation(int n, uint64_t seed) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  deterministic_shuffle(v, seed);
  return v;
}

uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

void parallel_for(int begin, int end, int threads,
                  const std::function<void(int, int)>& body) {
  int n = end - begin;
  if (n <= 0) return;
  threads = std::min(std::max(threads, 1), n);
  if (threads == 1) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = begin + t * chunk;
    int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&, t, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void parallel_for_each(int begin, int end, int threads,
                       const std::function<void(int)>& body) {
  parallel_for(begin, end, threads, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) body(i);
  });
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

}  // namespace spatfuse
