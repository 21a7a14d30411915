#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ite {

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

// Inverse standard normal CDF. Bisection seeded by a crude logit guess,
// polished with Newton steps; accurate to ~1e-12 over p in (0,1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  double lo = -40.0, hi = 40.0;
  double z = std::log(p / (1.0 - p)) * 0.6266;  // logistic approximation
  for (int i = 0; i < 80; ++i) {
    const double c = normal_cdf(z);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    if (c > p) hi = z; else lo = z;
    if (pdf > 1e-300) {
      const double step = (c - p) / pdf;
      z -= step;
      if (!(z > lo && z < hi)) z = 0.5 * (lo + hi);
      if (std::abs(step) < 1e-13) break;
    } else {
      z = 0.5 * (lo + hi);
    }
  }
  return z;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median_of: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double median_of(std::span<const double> v) {
  return median_of(std::vector<double>(v.begin(), v.end()));
}

// P(X <= k) for X ~ Binomial(n, 1/2), evaluated in log space so large n
// does not underflow.
inline double binomial_half_cdf(std::int64_t k, std::int64_t n) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  double sum = 0.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  for (std::int64_t i = 0; i <= k; ++i) {
    const double log_c = std::lgamma(static_cast<double>(n) + 1.0) -
                         std::lgamma(static_cast<double>(i) + 1.0) -
                         std::lgamma(static_cast<double>(n - i) + 1.0);
    sum += std::exp(log_c + log_half_n);
  }
  return std::min(sum, 1.0);
}

// Ordinary least squares y = a + b*x. Returns {intercept, slope}.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares: need >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("least_squares: degenerate abscissa");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace ite
