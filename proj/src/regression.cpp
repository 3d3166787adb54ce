#include "mixflow/regression.hpp"

#include <cmath>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

namespace {

double log1pexp(double m) {
  // log(1 + e^m) without overflow on either side.
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  double e = std::exp(m);
  return e / (1.0 + e);
}

// Shared plumbing: the dataset, the parameter layout (p coefficients plus
// an optional trailing transformed scale parameter), and input checking.
class RegressionBase : public TargetModel {
 public:
  RegressionBase(Dataset data, bool has_scale, std::string name)
      : data_(std::move(data)), has_scale_(has_scale), name_(std::move(name)) {
    if (data_.rows() == 0 || data_.cols() == 0) {
      throw InvalidArgument(name_ + ": dataset must have rows and features");
    }
  }

  Eigen::Index dim() const override {
    return data_.cols() + (has_scale_ ? 1 : 0);
  }

  std::string name() const override { return name_; }

 protected:
  void check(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) {
      throw InvalidArgument(name_ + ": parameter has dimension " +
                            std::to_string(theta.size()) + ", expected " +
                            std::to_string(dim()));
    }
  }

  Eigen::VectorXd beta_of(const Eigen::VectorXd& theta) const {
    return theta.head(data_.cols());
  }

  const Dataset data_;
  const bool has_scale_;
  const std::string name_;
};

// y ~ N(x'beta, sigma^2), beta_i ~ N(0,1), s = log sigma^2 ~ N(0,1).
class LinearNormal final : public RegressionBase {
 public:
  explicit LinearNormal(Dataset data)
      : RegressionBase(std::move(data), true, "linear_normal") {}

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd resid =
        data_.responses - data_.features * beta_of(theta);
    double inv_var = std::exp(-s);
    double l = -0.5 * static_cast<double>(data_.rows()) * (kLog2Pi + s) -
               0.5 * inv_var * resid.squaredNorm();
    l += -0.5 * beta_of(theta).squaredNorm() -
         0.5 * static_cast<double>(data_.cols()) * kLog2Pi;
    l += normal_log_pdf(s);
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * beta;
    double inv_var = std::exp(-s);
    Eigen::VectorXd g(dim());
    g.head(data_.cols()) =
        inv_var * (data_.features.transpose() * resid) - beta;
    g[dim() - 1] = -0.5 * static_cast<double>(data_.rows()) +
                   0.5 * inv_var * resid.squaredNorm() - s;
    return g;
  }
};

// y ~ Cauchy(x'beta, sigma), beta_i ~ Cauchy(0,1), s = log sigma^2 ~ N(0,1).
class LinearCauchy final : public RegressionBase {
 public:
  explicit LinearCauchy(Dataset data)
      : RegressionBase(std::move(data), true, "linear_cauchy") {}

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * beta;
    double inv_scale = std::exp(-0.5 * s);
    double l = 0.0;
    for (Eigen::Index j = 0; j < resid.size(); ++j) {
      double t = resid[j] * inv_scale;
      l += -std::log(kPi) - 0.5 * s - std::log1p(t * t);
    }
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      l += -std::log(kPi) - std::log1p(beta[i] * beta[i]);
    }
    l += normal_log_pdf(s);
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * beta;
    double inv_scale = std::exp(-0.5 * s);
    Eigen::VectorXd w(resid.size());
    double gs = 0.0;
    for (Eigen::Index j = 0; j < resid.size(); ++j) {
      double t = resid[j] * inv_scale;
      double frac = t * t / (1.0 + t * t);
      w[j] = 2.0 * (t / (1.0 + t * t)) * inv_scale;
      gs += -0.5 + frac;
    }
    Eigen::VectorXd g(dim());
    g.head(data_.cols()) = data_.features.transpose() * w;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      g[i] += -2.0 * beta[i] / (1.0 + beta[i] * beta[i]);
    }
    g[dim() - 1] = gs - s;
    return g;
  }
};

// y ~ Bernoulli(logit^{-1}(x'beta)), beta_i | alpha ~ N(0, 1/alpha),
// alpha ~ Gamma(1, rate 0.01), parameterized by a = log alpha (the +a term
// is the change-of-variables Jacobian).
class Logistic final : public RegressionBase {
 public:
  explicit Logistic(Dataset data)
      : RegressionBase(std::move(data), true, "logistic") {
    for (Eigen::Index j = 0; j < data_.rows(); ++j) {
      double y = data_.responses[j];
      if (y != 0.0 && y != 1.0) {
        throw InvalidArgument(
            "logistic: responses must be 0 or 1, found " + std::to_string(y) +
            " at row " + std::to_string(j));
      }
    }
  }

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double a = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd m = data_.features * beta;
    double l = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      l += data_.responses[j] * m[j] - log1pexp(m[j]);
    }
    double alpha = std::exp(a);
    l += static_cast<double>(data_.cols()) * (-0.5 * kLog2Pi + 0.5 * a) -
         0.5 * alpha * beta.squaredNorm();
    l += std::log(0.01) - 0.01 * alpha;  // Gamma(1, rate 0.01) at alpha
    l += a;                              // d alpha / d a
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double a = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd m = data_.features * beta;
    Eigen::VectorXd w(m.size());
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      w[j] = data_.responses[j] - sigmoid(m[j]);
    }
    double alpha = std::exp(a);
    Eigen::VectorXd g(dim());
    g.head(data_.cols()) = data_.features.transpose() * w - alpha * beta;
    g[dim() - 1] = 0.5 * static_cast<double>(data_.cols()) -
                   0.5 * alpha * beta.squaredNorm() - 0.01 * alpha + 1.0;
    return g;
  }
};

// y ~ Poisson(log(1 + e^{-x'beta})), beta_i ~ N(0,1).
class Poisson final : public RegressionBase {
 public:
  explicit Poisson(Dataset data)
      : RegressionBase(std::move(data), false, "poisson") {
    for (Eigen::Index j = 0; j < data_.rows(); ++j) {
      double y = data_.responses[j];
      if (y < 0.0 || y != std::floor(y)) {
        throw InvalidArgument(
            "poisson: responses must be non-negative integers, found " +
            std::to_string(y) + " at row " + std::to_string(j));
      }
    }
  }

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    Eigen::VectorXd m = data_.features * theta;
    double l = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      double rate = log1pexp(-m[j]);
      l += data_.responses[j] * std::log(rate) - rate -
           std::lgamma(data_.responses[j] + 1.0);
    }
    l += -0.5 * theta.squaredNorm() -
         0.5 * static_cast<double>(data_.cols()) * kLog2Pi;
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    Eigen::VectorXd m = data_.features * theta;
    Eigen::VectorXd w(m.size());
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      double rate = log1pexp(-m[j]);
      // d rate / d m = -sigmoid(-m)
      w[j] = (data_.responses[j] / rate - 1.0) * (-sigmoid(-m[j]));
    }
    return data_.features.transpose() * w - theta;
  }
};

// y ~ t_5(x'beta, 1), beta_i ~ Cauchy(0,1).
class StudentT final : public RegressionBase {
 public:
  explicit StudentT(Dataset data)
      : RegressionBase(std::move(data), false, "student_t") {}

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * theta;
    double norm_const =
        std::lgamma(3.0) - std::lgamma(2.5) - 0.5 * std::log(5.0 * kPi);
    double l = 0.0;
    for (Eigen::Index j = 0; j < resid.size(); ++j) {
      l += norm_const - 3.0 * std::log1p(resid[j] * resid[j] / 5.0);
    }
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      l += -std::log(kPi) - std::log1p(theta[i] * theta[i]);
    }
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * theta;
    Eigen::VectorXd w(resid.size());
    for (Eigen::Index j = 0; j < resid.size(); ++j) {
      w[j] = 6.0 * resid[j] / (5.0 + resid[j] * resid[j]);
    }
    Eigen::VectorXd g = data_.features.transpose() * w;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      g[i] += -2.0 * theta[i] / (1.0 + theta[i] * theta[i]);
    }
    return g;
  }
};

// y ~ N(x'beta, sigma^2) with a spike-and-slab scale-mixture prior on each
// coefficient: beta_i ~ 0.5 N(0, 0.1^2) + 0.5 N(0, 10^2); s = log sigma^2
// ~ N(0,1).
class Sparse final : public RegressionBase {
 public:
  explicit Sparse(Dataset data)
      : RegressionBase(std::move(data), true, "sparse") {}

  static constexpr double kTau1 = 0.1;
  static constexpr double kTau2 = 10.0;

  double log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * beta;
    double inv_var = std::exp(-s);
    double l = -0.5 * static_cast<double>(data_.rows()) * (kLog2Pi + s) -
               0.5 * inv_var * resid.squaredNorm();
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      l += log_add_exp(
          std::log(0.5) + normal_log_pdf(beta[i], 0.0, kTau1),
          std::log(0.5) + normal_log_pdf(beta[i], 0.0, kTau2));
    }
    l += normal_log_pdf(s);
    return l;
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& theta) const override {
    check(theta);
    double s = theta[theta.size() - 1];
    Eigen::VectorXd beta = beta_of(theta);
    Eigen::VectorXd resid = data_.responses - data_.features * beta;
    double inv_var = std::exp(-s);
    Eigen::VectorXd g(dim());
    g.head(data_.cols()) = inv_var * (data_.features.transpose() * resid);
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      double l1 = std::log(0.5) + normal_log_pdf(beta[i], 0.0, kTau1);
      double l2 = std::log(0.5) + normal_log_pdf(beta[i], 0.0, kTau2);
      double tot = log_add_exp(l1, l2);
      double r1 = std::exp(l1 - tot);
      double r2 = std::exp(l2 - tot);
      g[i] += r1 * (-beta[i] / (kTau1 * kTau1)) +
              r2 * (-beta[i] / (kTau2 * kTau2));
    }
    g[dim() - 1] = -0.5 * static_cast<double>(data_.rows()) +
                   0.5 * inv_var * resid.squaredNorm() - s;
    return g;
  }
};

}  // namespace

TargetPtr make_linear_regression(const Dataset& data) {
  return std::make_shared<LinearNormal>(data);
}
TargetPtr make_cauchy_regression(const Dataset& data) {
  return std::make_shared<LinearCauchy>(data);
}
TargetPtr make_logistic_regression(const Dataset& data) {
  return std::make_shared<Logistic>(data);
}
TargetPtr make_poisson_regression(const Dataset& data) {
  return std::make_shared<Poisson>(data);
}
TargetPtr make_student_t_regression(const Dataset& data) {
  return std::make_shared<StudentT>(data);
}
TargetPtr make_sparse_regression(const Dataset& data) {
  return std::make_shared<Sparse>(data);
}

TargetPtr regression_target(const std::string& model, const Dataset& data) {
  if (model == "linear_normal") return make_linear_regression(data);
  if (model == "linear_cauchy") return make_cauchy_regression(data);
  if (model == "logistic") return make_logistic_regression(data);
  if (model == "poisson") return make_poisson_regression(data);
  if (model == "student_t") return make_student_t_regression(data);
  if (model == "sparse") return make_sparse_regression(data);
  throw InvalidArgument("unknown regression model: " + model);
}

}  // namespace mixflow
