#pragma once

#include <Eigen/Core>

#include "mixflow/target.hpp"

namespace mixflow {

// Closed-form benchmark targets. The 1-d targets and the 2-d geometry
// benchmarks (banana, funnel, cross, warped Gaussian) all expose exact
// gradients; their normalizing constants are known, which makes them
// usable as ground truth for the total-mass checks.

TargetPtr make_gauss1d(double mean = 2.0, double sd = 2.0);

// 0.5 N(-3, 1.5^2) + 0.3 N(0, 0.8^2) + 0.2 N(3, 0.8^2)
TargetPtr make_gmm1d();

TargetPtr make_cauchy1d();

// Curved 2-d density: x2 | x1 ~ N(0.1 x1^2 - 10, 1), x1 ~ N(0, 100).
TargetPtr make_banana(double curvature = 0.1);

// Neal's funnel in d dimensions: x1 ~ N(0, 36),
// x_i | x1 ~ N(0, exp(x1 / 2)) for i >= 2.
TargetPtr make_funnel(Eigen::Index dim = 2);

// Four-component Gaussian cross centered at (0, +-2) and (+-2, 0).
TargetPtr make_cross();

// Rotationally warped Gaussian: the density at x is the N(0, diag(1, 0.12^2))
// density at x rotated by half its own radius.
TargetPtr make_warped_gaussian();

// Diagonal Gaussian in d dimensions (tests and reference-fit checks).
TargetPtr make_diag_gaussian(Eigen::VectorXd mean, Eigen::VectorXd sd);

// Lookup by name: gauss1d, gmm1d, cauchy1d, banana, funnel, cross, warp.
// `dim` only affects the funnel.
TargetPtr synthetic_target(const std::string& name, Eigen::Index dim = 2);

}  // namespace mixflow
