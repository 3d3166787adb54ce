#pragma once

#include <Eigen/Core>

#include "mixflow/dataset.hpp"
#include "mixflow/target.hpp"

namespace mixflow {

// Bayesian regression posteriors on a dataset. Parameter layouts:
//   linear_normal / linear_cauchy: (beta_1..beta_p, s) with s = log sigma^2
//   logistic:                      (beta_1..beta_p, a) with a = log alpha
//   poisson / student_t:           (beta_1..beta_p)
//   sparse:                        (beta_1..beta_p, s) with s = log sigma^2
// All densities are joint log posteriors up to a constant, with any
// transformed parameter expressed directly in the unconstrained coordinate.

// Gaussian likelihood y ~ N(x'beta, sigma^2); N(0,1) priors on beta and s.
TargetPtr make_linear_regression(const Dataset& data);

// Cauchy likelihood y ~ Cauchy(x'beta, sigma); Cauchy(0,1) priors on beta,
// N(0,1) prior on s.
TargetPtr make_cauchy_regression(const Dataset& data);

// Bernoulli likelihood with logit link; hierarchical Gaussian prior
// beta_i ~ N(0, 1/alpha), alpha ~ Gamma(1, 0.01), a = log alpha.
TargetPtr make_logistic_regression(const Dataset& data);

// Poisson likelihood with softplus rate lambda = log(1 + exp(x'beta));
// N(0,1) priors on beta.
TargetPtr make_poisson_regression(const Dataset& data);

// Student-t(5) likelihood y ~ t_5(x'beta, 1); Cauchy(0,1) priors on beta.
TargetPtr make_student_t_regression(const Dataset& data);

// Gaussian likelihood with a two-component spike-and-slab Gaussian mixture
// prior on each beta_i; N(0,1) prior on s.
TargetPtr make_sparse_regression(const Dataset& data);

// Lookup by model name (linear_normal, linear_cauchy, logistic, poisson,
// student_t, sparse).
TargetPtr regression_target(const std::string& model, const Dataset& data);

}  // namespace mixflow
