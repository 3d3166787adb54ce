#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>

#include "mixflow/errors.hpp"
#include "mixflow/rng.hpp"

namespace mixflow {

enum class MomentumKind { kLaplace, kGaussian };

// Fully factorized momentum distribution: each coordinate is an independent
// standard Laplace or standard Gaussian. The CDF/quantile pair is the
// workhorse for the momentum refreshment map, so both are implemented to
// keep as much tail precision as binary64 allows. CDF outputs are clamped
// away from exactly 0 and 1 (saturation there would make the refreshment
// map lose its input irrecoverably), and quantile clamps symmetrically, so
// round trips never produce infinities.
class MomentumModel {
 public:
  static constexpr double kCdfClamp = 1e-15;

  explicit MomentumModel(MomentumKind kind) : kind_(kind) {}

  MomentumKind kind() const { return kind_; }
  std::string name() const {
    return kind_ == MomentumKind::kLaplace ? "laplace" : "gaussian";
  }

  double cdf(double v) const {
    if (std::isnan(v)) throw InvalidArgument("momentum cdf: NaN input");
    double p =
        kind_ == MomentumKind::kLaplace ? laplace_cdf(v) : normal_cdf(v);
    return std::min(std::max(p, kCdfClamp), 1.0 - kCdfClamp);
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw InvalidArgument("momentum quantile: probability outside (0,1)");
    }
    p = std::min(std::max(p, kCdfClamp), 1.0 - kCdfClamp);
    return kind_ == MomentumKind::kLaplace ? laplace_quantile(p)
                                           : normal_quantile(p);
  }

  double log_pdf(double v) const {
    return kind_ == MomentumKind::kLaplace ? laplace_log_pdf(v)
                                           : normal_log_pdf(v);
  }

  double log_pdf(const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += log_pdf(v[i]);
    return s;
  }

  double grad_log_pdf(double v) const {
    if (kind_ == MomentumKind::kLaplace) {
      return v > 0.0 ? -1.0 : (v < 0.0 ? 1.0 : 0.0);
    }
    return -v;
  }

  Eigen::VectorXd grad_log_pdf(const Eigen::VectorXd& v) const {
    Eigen::VectorXd g(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) g[i] = grad_log_pdf(v[i]);
    return g;
  }

  std::pair<double, Eigen::VectorXd> logpdf_grad(
      const Eigen::VectorXd& v) const {
    if (!v.allFinite()) {
      throw InvalidArgument("momentum logpdf_grad: non-finite input");
    }
    return {log_pdf(v), grad_log_pdf(v)};
  }

  double sample(Rng& rng) const {
    return kind_ == MomentumKind::kLaplace ? standard_laplace(rng)
                                           : standard_normal(rng);
  }

  Eigen::VectorXd sample(Rng& rng, Eigen::Index dim) const {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = sample(rng);
    return v;
  }

 private:
  MomentumKind kind_;
};

}  // namespace mixflow
