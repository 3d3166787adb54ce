#include "mixflow/synthetic.hpp"

#include <cmath>
#include <vector>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

namespace {

void check_dim(const Eigen::VectorXd& x, Eigen::Index want,
               const char* who) {
  if (x.size() != want) {
    throw InvalidArgument(std::string(who) + ": point has dimension " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(want));
  }
}

class Gauss1d final : public TargetModel {
 public:
  Gauss1d(double mean, double sd) : mean_(mean), sd_(sd) {
    if (!(sd > 0.0)) throw InvalidArgument("gauss1d: sd must be positive");
  }

  Eigen::Index dim() const override { return 1; }
  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 1, "gauss1d");
    return normal_log_pdf(x[0], mean_, sd_);
  }
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 1, "gauss1d");
    Eigen::VectorXd g(1);
    g[0] = -(x[0] - mean_) / (sd_ * sd_);
    return g;
  }
  bool normalization_known() const override { return true; }
  std::string name() const override { return "gauss1d"; }

 private:
  double mean_, sd_;
};

// Generic diagonal-covariance Gaussian mixture; used by the 1-d trimodal
// benchmark and the 2-d cross.
class GaussMixture final : public TargetModel {
 public:
  struct Component {
    double log_weight;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
  };

  GaussMixture(std::string name, std::vector<Component> comps)
      : name_(std::move(name)), comps_(std::move(comps)) {}

  Eigen::Index dim() const override { return comps_[0].mean.size(); }

  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, dim(), name_.c_str());
    return log_sum_exp(component_logs(x));
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, dim(), name_.c_str());
    std::vector<double> lw = component_logs(x);
    double total = log_sum_exp(lw);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      double resp = std::exp(lw[i] - total);
      const Component& c = comps_[i];
      g -= resp * ((x - c.mean).array() / c.sd.array().square()).matrix();
    }
    return g;
  }

  bool normalization_known() const override { return true; }
  std::string name() const override { return name_; }

 private:
  std::vector<double> component_logs(const Eigen::VectorXd& x) const {
    std::vector<double> lw(comps_.size());
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const Component& c = comps_[i];
      double l = c.log_weight;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        l += normal_log_pdf(x[j], c.mean[j], c.sd[j]);
      }
      lw[i] = l;
    }
    return lw;
  }

  std::string name_;
  std::vector<Component> comps_;
};

class Cauchy1d final : public TargetModel {
 public:
  Eigen::Index dim() const override { return 1; }
  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 1, "cauchy1d");
    return -std::log(kPi) - std::log1p(x[0] * x[0]);
  }
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 1, "cauchy1d");
    Eigen::VectorXd g(1);
    g[0] = -2.0 * x[0] / (1.0 + x[0] * x[0]);
    return g;
  }
  bool normalization_known() const override { return true; }
  std::string name() const override { return "cauchy1d"; }
};

// x1 = y1, x2 = y2 + b y1^2 - 100 b with y ~ N(0, diag(100, 1)); the change
// of variables has unit Jacobian, so the density stays normalized.
class Banana final : public TargetModel {
 public:
  explicit Banana(double b) : b_(b) {}

  Eigen::Index dim() const override { return 2; }

  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 2, "banana");
    double y2 = x[1] - b_ * x[0] * x[0] + 100.0 * b_;
    return normal_log_pdf(x[0], 0.0, 10.0) + normal_log_pdf(y2);
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 2, "banana");
    double y2 = x[1] - b_ * x[0] * x[0] + 100.0 * b_;
    Eigen::VectorXd g(2);
    g[0] = -x[0] / 100.0 + 2.0 * b_ * x[0] * y2;
    g[1] = -y2;
    return g;
  }

  bool normalization_known() const override { return true; }
  std::string name() const override { return "banana"; }

 private:
  double b_;
};

// x1 ~ N(0, 36); x_i | x1 ~ N(0, exp(x1 / 2)) for i >= 2, where
// exp(x1 / 2) is the conditional variance.
class Funnel final : public TargetModel {
 public:
  explicit Funnel(Eigen::Index d) : d_(d) {
    if (d < 2) throw InvalidArgument("funnel: dimension must be >= 2");
  }

  Eigen::Index dim() const override { return d_; }

  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, d_, "funnel");
    double l = normal_log_pdf(x[0], 0.0, 6.0);
    double inv_var = std::exp(-x[0] / 2.0);
    for (Eigen::Index i = 1; i < d_; ++i) {
      l += -0.5 * kLog2Pi - x[0] / 4.0 - 0.5 * x[i] * x[i] * inv_var;
    }
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, d_, "funnel");
    Eigen::VectorXd g(d_);
    double inv_var = std::exp(-x[0] / 2.0);
    double g1 = -x[0] / 36.0;
    for (Eigen::Index i = 1; i < d_; ++i) {
      g1 += -0.25 + 0.25 * x[i] * x[i] * inv_var;
      g[i] = -x[i] * inv_var;
    }
    g[0] = g1;
    return g;
  }

  bool normalization_known() const override { return true; }
  std::string name() const override { return "funnel"; }

 private:
  Eigen::Index d_;
};

// Density of x when y = Rot(|x|/2) x is standard-rotated back to a
// N(0, diag(1, 0.12^2)) draw; the radius-dependent rotation is
// area-preserving, so no Jacobian term appears.
class WarpedGaussian final : public TargetModel {
 public:
  Eigen::Index dim() const override { return 2; }

  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 2, "warp");
    Eigen::Vector2d y = unwarp(x);
    return normal_log_pdf(y[0], 0.0, 1.0) + normal_log_pdf(y[1], 0.0, 0.12);
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, 2, "warp");
    double r = x.norm();
    double a = 0.5 * r;
    double ca = std::cos(a), sa = std::sin(a);
    Eigen::Matrix2d rot;
    rot << ca, -sa, sa, ca;
    Eigen::Vector2d y = rot * Eigen::Vector2d(x[0], x[1]);
    Eigen::Vector2d gy(-y[0], -y[1] / (0.12 * 0.12));
    // dy/dx = Rot(a) + Rot'(a) x x^T / (2 r); the second term vanishes as
    // r -> 0 since |x x^T / r| = r.
    Eigen::Matrix2d jac = rot;
    if (r > 1e-12) {
      Eigen::Matrix2d drot;
      drot << -sa, -ca, ca, -sa;
      jac += drot * (Eigen::Vector2d(x[0], x[1]) *
                     Eigen::RowVector2d(x[0], x[1])) /
             (2.0 * r);
    }
    Eigen::Vector2d g = jac.transpose() * gy;
    return g;
  }

  bool normalization_known() const override { return true; }
  std::string name() const override { return "warp"; }

 private:
  static Eigen::Vector2d unwarp(const Eigen::VectorXd& x) {
    double r = x.norm();
    double a = 0.5 * r;
    double ca = std::cos(a), sa = std::sin(a);
    return {ca * x[0] - sa * x[1], sa * x[0] + ca * x[1]};
  }
};

class DiagGaussian final : public TargetModel {
 public:
  DiagGaussian(Eigen::VectorXd mean, Eigen::VectorXd sd)
      : mean_(std::move(mean)), sd_(std::move(sd)) {
    if (mean_.size() != sd_.size() || mean_.size() == 0) {
      throw InvalidArgument("diag_gaussian: mean/sd size mismatch");
    }
    if ((sd_.array() <= 0.0).any()) {
      throw InvalidArgument("diag_gaussian: sd must be positive");
    }
  }

  Eigen::Index dim() const override { return mean_.size(); }

  double log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, dim(), "diag_gaussian");
    double l = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      l += normal_log_pdf(x[i], mean_[i], sd_[i]);
    }
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const override {
    check_dim(x, dim(), "diag_gaussian");
    return (-(x - mean_).array() / sd_.array().square()).matrix();
  }

  bool normalization_known() const override { return true; }
  std::string name() const override { return "diag_gaussian"; }

 private:
  Eigen::VectorXd mean_, sd_;
};

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TargetPtr make_gauss1d(double mean, double sd) {
  return std::make_shared<Gauss1d>(mean, sd);
}

TargetPtr make_gmm1d() {
  Eigen::VectorXd m1(1), m2(1), m3(1), s1(1), s2(1), s3(1);
  m1 << -3.0;
  m2 << 0.0;
  m3 << 3.0;
  s1 << 1.5;
  s2 << 0.8;
  s3 << 0.8;
  std::vector<GaussMixture::Component> comps = {
      {std::log(0.5), m1, s1},
      {std::log(0.3), m2, s2},
      {std::log(0.2), m3, s3},
  };
  return std::make_shared<GaussMixture>("gmm1d", std::move(comps));
}

TargetPtr make_cauchy1d() { return std::make_shared<Cauchy1d>(); }

TargetPtr make_banana(double curvature) {
  return std::make_shared<Banana>(curvature);
}

TargetPtr make_funnel(Eigen::Index dim) {
  return std::make_shared<Funnel>(dim);
}

TargetPtr make_cross() {
  double lw = std::log(0.25);
  std::vector<GaussMixture::Component> comps = {
      {lw, vec2(0.0, 2.0), vec2(0.15, 1.0)},
      {lw, vec2(0.0, -2.0), vec2(0.15, 1.0)},
      {lw, vec2(-2.0, 0.0), vec2(1.0, 0.15)},
      {lw, vec2(2.0, 0.0), vec2(1.0, 0.15)},
  };
  return std::make_shared<GaussMixture>("cross", std::move(comps));
}

TargetPtr make_warped_gaussian() { return std::make_shared<WarpedGaussian>(); }

TargetPtr make_diag_gaussian(Eigen::VectorXd mean, Eigen::VectorXd sd) {
  return std::make_shared<DiagGaussian>(std::move(mean), std::move(sd));
}

TargetPtr synthetic_target(const std::string& name, Eigen::Index dim) {
  if (name == "gauss1d") return make_gauss1d();
  if (name == "gmm1d") return make_gmm1d();
  if (name == "cauchy1d") return make_cauchy1d();
  if (name == "banana") return make_banana();
  if (name == "funnel") return make_funnel(dim);
  if (name == "cross") return make_cross();
  if (name == "warp") return make_warped_gaussian();
  throw InvalidArgument("unknown synthetic target: " + name);
}

}  // namespace mixflow
