#pragma once

// Scalar moment accumulators and error propagation helpers. Estimator hot
// paths keep integer sufficient statistics (exact, order-independent
// merging); this header handles the floating-point summaries.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace perclab {

struct Estimate {
  double value = 0.0;
  double stderr = 0.0;
  uint64_t n = 0;
};

// Running mean/variance over double-valued samples (merged deterministically
// in task order by the parallel driver).
struct MeanVar {
  uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sumsq += v * v;
  }
  void merge(const MeanVar& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double sample_var() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0 ? v : 0.0;
  }
  double stderr_of_mean() const { return n ? std::sqrt(sample_var() / static_cast<double>(n)) : 0.0; }
  Estimate estimate() const { return {mean(), stderr_of_mean(), n}; }
};

// Mean/stderr from integer sufficient statistics sum w_i, sum w_i^2.
inline Estimate moments_estimate(double sum_w, double sum_w2, uint64_t n) {
  Estimate e;
  e.n = n;
  if (n == 0) return e;
  e.value = sum_w / static_cast<double>(n);
  if (n >= 2) {
    double var = (sum_w2 - static_cast<double>(n) * e.value * e.value) / static_cast<double>(n - 1);
    if (var < 0) var = 0;
    e.stderr = std::sqrt(var / static_cast<double>(n));
  }
  return e;
}

inline double binomial_stderr(double phat, uint64_t n) {
  if (n < 2) return 0.0;
  double var = phat * (1.0 - phat);
  return std::sqrt(var / static_cast<double>(n));
}

inline double combine_stderr(double a, double b) { return std::sqrt(a * a + b * b); }

// Pool independent estimates of the same mean from archives with m_i samples.
inline Estimate pool_estimates(const Estimate& a, const Estimate& b) {
  Estimate out;
  out.n = a.n + b.n;
  if (out.n == 0) return out;
  double sw = a.value * static_cast<double>(a.n) + b.value * static_cast<double>(b.n);
  // recover sum of squares: var*(n-1) + n*mean^2
  auto sumsq = [](const Estimate& e) {
    double var = e.stderr * e.stderr * static_cast<double>(e.n);
    return var * static_cast<double>(e.n >= 1 ? e.n - 1 : 0) +
           static_cast<double>(e.n) * e.value * e.value;
  };
  double sq = sumsq(a) + sumsq(b);
  return moments_estimate(sw, sq, out.n);
}

}  // namespace perclab
