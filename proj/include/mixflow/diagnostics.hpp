#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "mixflow/flow.hpp"
#include "mixflow/mixflow.hpp"
#include "mixflow/rng.hpp"

namespace mixflow {

// Kernel Stein discrepancy with the inverse multiquadric kernel
// k(x, y) = (c^2 + |x - y|^2)^beta against the score function of the
// target. Returns the square root of the V-statistic (all n^2 pairs).
// Pairwise kernel terms are accumulated with an exactly rounded sum, so the
// result is invariant under permutation of the sample and exactly
// consistent under sample duplication.
double ksd_imq(const std::vector<Eigen::VectorXd>& samples,
               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
                   score,
               double c = 1.0, double beta = -0.5);

// Effective sample size of a scalar series by the batch-means method:
// ESS = n * S^2 / sigma2_bm with batch size floor(sqrt(n)). Requires
// n >= 10; a constant series is DegenerateInput. The result is clipped
// below at 1.
double ess_batch_means(const std::vector<double>& series);

// Forward-inverse stability of a transform. For each K the profile records
// quantiles of || T^{-K}(T^K(s)) - s || and || T^K(T^{-K}(s)) - s || over a
// set of reference draws (Euclidean norm over all coordinates of the
// augmented state). A trajectory that diverges contributes +inf rather
// than aborting the profile.
struct StabilityRecord {
  long k = 0;
  double fwd_inv_q25 = 0.0, fwd_inv_q50 = 0.0, fwd_inv_q75 = 0.0;
  double inv_fwd_q25 = 0.0, inv_fwd_q50 = 0.0, inv_fwd_q75 = 0.0;
};
using StabilityProfile = std::vector<StabilityRecord>;

StabilityProfile stability_profile(const FlowTransform& flow,
                                   const AugmentedReference& reference,
                                   const std::vector<long>& ks, int n_draws,
                                   Rng& rng);

// Head-to-head variance comparison of two unbiased estimators of E_q[f]
// under a shared budget of flow-map evaluations per trial. An independent
// draw costs its sampled mixture index K (random), while a trajectory
// average costs N-1 evaluations (one reference draw, N-1 map applications),
// so the arms see different draw counts for the same budget; that asymmetry
// is part of the comparison.
//   iid arm:        independent flow draws until the budget is spent
//                   (the draw that crosses the budget is kept)
//   trajectory arm: floor(budget / (N-1)) single-draw trajectory averages
// Reported are across-trial means and sample variances of each arm's
// per-trial estimate, plus the average draws per trial in each arm.
struct EstimatorComparison {
  double iid_mean = 0.0, iid_variance = 0.0;
  double traj_mean = 0.0, traj_variance = 0.0;
  double iid_draws_per_trial = 0.0;
  double traj_draws_per_trial = 0.0;
};

EstimatorComparison compare_estimators(
    const MixFlow& flow,
    const std::function<double(const AugmentedState&)>& f, long eval_budget,
    int trials, Rng& rng);

}  // namespace mixflow
