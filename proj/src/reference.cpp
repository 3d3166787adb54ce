#include "mixflow/reference.hpp"

#include <Eigen/LU>
#include <cmath>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

AugmentedReference::AugmentedReference(Eigen::VectorXd mean,
                                       Eigen::VectorXd scale,
                                       MomentumModel momentum)
    : mean_(std::move(mean)), scale_(std::move(scale)), momentum_(momentum) {
  if (mean_.size() == 0 || mean_.size() != scale_.size()) {
    throw InvalidArgument("reference: mean/scale size mismatch");
  }
  if (!((scale_.array() > 0.0).all() && scale_.allFinite() &&
        mean_.allFinite())) {
    throw InvalidArgument("reference: scales must be positive and finite");
  }
}

void AugmentedReference::set_affine(const Eigen::MatrixXd& a,
                                    const Eigen::VectorXd& b) {
  if (a.rows() != dim() || a.cols() != dim() || b.size() != dim()) {
    throw InvalidArgument("reference: affine map has wrong shape");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw InvalidArgument("reference: affine matrix is singular");
  }
  double log_abs_det = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    log_abs_det += std::log(std::abs(lu.matrixLU()(i, i)));
  }
  affine_ = Affine{a, lu.inverse(), b, log_abs_det};
}

AugmentedState AugmentedReference::sample(Rng& rng) const {
  Eigen::VectorXd x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    x[i] = mean_[i] + scale_[i] * standard_normal(rng);
  }
  if (affine_) x = affine_->a * x + affine_->b;
  Eigen::VectorXd rho = momentum_.sample(rng, dim());
  double u = uniform01(rng);
  return AugmentedState(std::move(x), std::move(rho), u);
}

double AugmentedReference::log_density(const AugmentedState& s) const {
  if (s.x.size() != dim() || s.rho.size() != dim()) {
    throw InvalidArgument("reference: state dimension mismatch");
  }
  if (!(s.u >= 0.0 && s.u < 1.0)) return -kInf;
  return log_density_x(s.x) + momentum_.log_pdf(s.rho);
}

double AugmentedReference::log_density_x(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw InvalidArgument("reference: point dimension mismatch");
  }
  Eigen::VectorXd z = x;
  double correction = 0.0;
  if (affine_) {
    z = affine_->a_inv * (x - affine_->b);
    correction = -affine_->log_abs_det;
  }
  double l = correction;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    l += normal_log_pdf(z[i], mean_[i], scale_[i]);
  }
  return l;
}

MeanFieldFit fit_meanfield(const TargetModel& target, MomentumModel momentum,
                           int steps, double step_size, int batch_size,
                           Rng& rng) {
  if (steps < 0) throw InvalidArgument("fit_meanfield: steps must be >= 0");
  if (batch_size < 1) {
    throw InvalidArgument("fit_meanfield: batch size must be >= 1");
  }
  if (!(step_size > 0.0)) {
    throw InvalidArgument("fit_meanfield: step size must be positive");
  }

  const Eigen::Index d = target.dim();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd ls = Eigen::VectorXd::Zero(d);  // log standard deviations

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(2 * d);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * d);

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(steps));
  // Entropy of a diagonal Gaussian minus the sum of log-scales.
  const double entropy_const =
      0.5 * static_cast<double>(d) * (kLog2Pi + 1.0);

  for (int t = 1; t <= steps; ++t) {
    Eigen::VectorXd sigma = ls.array().exp().matrix();
    Eigen::VectorXd grad_mu = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd grad_ls = Eigen::VectorXd::Zero(d);
    double logp_acc = 0.0;
    for (int b = 0; b < batch_size; ++b) {
      Eigen::VectorXd z(d);
      for (Eigen::Index i = 0; i < d; ++i) z[i] = standard_normal(rng);
      Eigen::VectorXd x = mu + sigma.cwiseProduct(z);
      logp_acc += target.log_density(x);
      Eigen::VectorXd g = target.grad_log_density(x);
      grad_mu += g;
      grad_ls += g.cwiseProduct(sigma.cwiseProduct(z));
    }
    grad_mu /= batch_size;
    grad_ls = grad_ls / batch_size + Eigen::VectorXd::Ones(d);
    double elbo = logp_acc / batch_size + ls.sum() + entropy_const;
    if (!std::isfinite(elbo) || !grad_mu.allFinite() || !grad_ls.allFinite()) {
      throw OptimizationFailure("mean-field fit diverged computing gradients",
                                mu, ls, t);
    }
    trace.push_back(elbo);

    Eigen::VectorXd grad(2 * d);
    grad << grad_mu, grad_ls;
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(kBeta1, t);
    double c2 = 1.0 - std::pow(kBeta2, t);
    Eigen::VectorXd step =
        (step_size * (m / c1).array() / ((v / c2).array().sqrt() + kAdamEps))
            .matrix();
    Eigen::VectorXd mu_next = mu + step.head(d);
    Eigen::VectorXd ls_next = ls + step.tail(d);
    if (!mu_next.allFinite() || !ls_next.allFinite()) {
      throw OptimizationFailure("mean-field fit produced non-finite iterate",
                                mu, ls, t);
    }
    mu = std::move(mu_next);
    ls = std::move(ls_next);
  }

  AugmentedReference ref(mu, ls.array().exp().matrix(), momentum);
  return MeanFieldFit{std::move(ref), std::move(trace)};
}

}  // namespace mixflow
