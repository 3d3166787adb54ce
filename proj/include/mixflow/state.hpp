#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

// Point in the augmented space: position x, momentum rho (same dimension),
// and a scalar pseudotime u in [0, 1). Instances are counted so tests can
// verify that the constant-memory estimators really allocate O(1) states
// regardless of flow length.
struct AugmentedState {
  Eigen::VectorXd x;
  Eigen::VectorXd rho;
  double u = 0.0;

  AugmentedState() { bump(); }
  AugmentedState(Eigen::VectorXd x_in, Eigen::VectorXd rho_in, double u_in)
      : x(std::move(x_in)), rho(std::move(rho_in)), u(u_in) {
    bump();
  }
  AugmentedState(const AugmentedState& o) : x(o.x), rho(o.rho), u(o.u) {
    bump();
  }
  AugmentedState(AugmentedState&& o) noexcept
      : x(std::move(o.x)), rho(std::move(o.rho)), u(o.u) {
    bump();
  }
  AugmentedState& operator=(const AugmentedState&) = default;
  AugmentedState& operator=(AugmentedState&&) = default;
  ~AugmentedState() { live_.fetch_sub(1, std::memory_order_relaxed); }

  Eigen::Index dim() const { return x.size(); }

  bool finite() const {
    return x.allFinite() && rho.allFinite() && std::isfinite(u);
  }

  static long live_instances() {
    return live_.load(std::memory_order_relaxed);
  }
  static long peak_instances() {
    return peak_.load(std::memory_order_relaxed);
  }
  static void reset_peak() {
    peak_.store(live_.load(std::memory_order_relaxed),
                std::memory_order_relaxed);
  }

 private:
  void bump() {
    long now = live_.fetch_add(1, std::memory_order_relaxed) + 1;
    long prev = peak_.load(std::memory_order_relaxed);
    while (now > prev &&
           !peak_.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
    }
  }

  static inline std::atomic<long> live_{0};
  static inline std::atomic<long> peak_{0};
};

inline void validate_state(const AugmentedState& s) {
  if (s.x.size() == 0) throw InvalidArgument("state has empty position");
  if (s.rho.size() != s.x.size()) {
    throw InvalidArgument("momentum dimension does not match position");
  }
  if (!(s.u >= 0.0 && s.u < 1.0)) {
    throw InvalidArgument("pseudotime must lie in [0, 1)");
  }
}

inline double max_abs_diff(const AugmentedState& a, const AugmentedState& b) {
  double m = (a.x - b.x).cwiseAbs().maxCoeff();
  m = std::max(m, (a.rho - b.rho).cwiseAbs().maxCoeff());
  return std::max(m, std::abs(a.u - b.u));
}

// Euclidean distance over the concatenated (x, rho, u) coordinates. If any
// coordinate diverged to inf the distance is inf rather than NaN.
inline double l2_diff(const AugmentedState& a, const AugmentedState& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.x.size(); ++i) {
    double d = a.x[i] - b.x[i];
    if (std::isnan(d)) d = kInf;
    s += d * d;
  }
  for (Eigen::Index i = 0; i < a.rho.size(); ++i) {
    double d = a.rho[i] - b.rho[i];
    if (std::isnan(d)) d = kInf;
    s += d * d;
  }
  double du = a.u - b.u;
  if (std::isnan(du)) du = kInf;
  s += du * du;
  return std::sqrt(s);
}

}  // namespace mixflow
