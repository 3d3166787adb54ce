#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace mixflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.8378770664093454836;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)), safe for -inf arguments.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)) for a >= b in exact arithmetic. Returns -inf when the
// difference underflows or rounding pushed b at or above a.
inline double log_sub_exp(double a, double b) {
  if (b == -kInf) return a;
  if (b >= a) return -kInf;
  return a + std::log1p(-std::exp(b - a));
}

inline double log_sum_exp(const std::vector<double>& v) {
  double hi = -kInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == -kInf || std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline double normal_log_pdf(double v) { return -0.5 * kLog2Pi - 0.5 * v * v; }

inline double normal_log_pdf(double v, double mean, double sd) {
  double z = (v - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

inline double normal_cdf(double v) {
  return 0.5 * std::erfc(-v * 0.70710678118654752440);
}

// Inverse standard normal CDF (Wichura's PPND16 rational approximations,
// ~1 ulp of double precision over the full open interval).
double normal_quantile(double p);

inline double laplace_log_pdf(double v) {
  return -std::abs(v) - 0.69314718055994530942;
}

inline double laplace_cdf(double v) {
  if (v <= 0.0) return 0.5 * std::exp(v);
  return 0.5 + 0.5 * (-std::expm1(-v));
}

inline double laplace_quantile(double p) {
  // 1-p is exact for p >= 0.5, so both branches keep full precision.
  if (p < 0.5) return std::log(2.0 * p);
  return -std::log(2.0 * (1.0 - p));
}

// Exactly rounded running sum of doubles (Shewchuk-style expansion of
// non-overlapping partials). The extracted value depends only on the exact
// real-number sum of everything added, not on the order of additions; this
// is what makes the kernel-discrepancy invariance checks exact.
class ExactSum {
 public:
  void add(double x) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < partials_.size(); ++i) {
      double c = partials_[i];
      double s = x + c;
      double big = std::abs(x) >= std::abs(c) ? x : c;
      double small = std::abs(x) >= std::abs(c) ? c : x;
      double err = small - (s - big);
      if (err != 0.0) partials_[out++] = err;
      x = s;
    }
    partials_.resize(out);
    partials_.push_back(x);
  }

  double value() const {
    double s = 0.0;
    for (double c : partials_) s += c;
    return s;
  }

 private:
  std::vector<double> partials_;  // non-overlapping, increasing magnitude
};

// Linear-interpolation quantile (the common "type 7" rule). q in [0, 1].
// Infinite entries are handled without producing NaN from inf - inf.
inline double quantile_linear(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (v.size() == 1) return v[0];
  double h = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(h);
  if (lo >= v.size() - 1) return v.back();
  double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || v[lo] == v[lo + 1]) return v[lo];
  if (std::isinf(v[lo + 1])) return frac > 0.0 ? v[lo + 1] : v[lo];
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample variance (n-1 divisor); 0 for fewer than two points.
inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace mixflow
