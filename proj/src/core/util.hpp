#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spatfuse {

// Collects warnings raised by lower-level operations. Messages are
// deduplicated on insert so each distinct warning surfaces exactly once in
// the run metadata.
class WarningLog {
 public:
  void add(const std::string& msg);
  void merge(const WarningLog& other);
  const std::vector<std::string>& messages() const { return messages_; }
  bool empty() const { return messages_.empty(); }
  std::size_t size() const { return messages_.size(); }

 private:
  std::vector<std::string> messages_;
};

struct OptimumResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

// Golden-section maximization of a unimodal f on [lo, hi] to x-tolerance tol.
OptimumResult golden_max(const std::function<double(double)>& f, double lo,
                         double hi, double tol);

// Coarse equispaced scan followed by golden-section refinement inside the
// bracket around the best scan point. Guards the golden search against
// starting in the wrong basin when f has shallow secondary modes.
OptimumResult scan_golden_max(const std::function<double(double)>& f, double lo,
                              double hi, int scan_points, double tol);

double normal_cdf(double x);
double two_sided_normal_p(double z);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta_reg(double a, double b, double x);

// Two-sided p-value for a t statistic with df degrees of freedom.
double two_sided_t_p(double t, double df);

uint64_t splitmix64(uint64_t x);

// Deterministic sub-seed for an independent task stream.
uint64_t derive_seed(uint64_t master, uint64_t stream);

// Fisher-Yates with explicit modulo draws from mt19937_64 so permutations
// are identical across standard-library implementations.
void deterministic_shuffle(std::vector<int>& v, uint64_t seed);
void deterministic_shuffle(std::vector<double>& v, uint64_t seed);
std::vector<int> seeded_permutation(int n, uint64_t seed);

uint64_t fnv1a64(const void* data, std::size_t len);
uint64_t fnv1a64(const std::string& s);
std::string hex64(uint64_t v);

// Runs body(begin, end) over contiguous chunks of [begin, end) on up to
// `threads` workers. threads <= 1 runs inline. Rethrows the first worker
// exception after joining.
void parallel_for(int begin, int end, int threads,
                  const std::function<void(int, int)>& body);

// Per-index variant of parallel_for.
void parallel_for_each(int begin, int end, int threads,
                       const std::function<void(int)>& body);

// Resolves a thread-count request: 0 means hardware concurrency.
int resolve_threads(int requested);

std::string format_double(double v, int decimals);

}  // namespace spatfuse
