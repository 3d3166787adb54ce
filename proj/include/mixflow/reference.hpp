#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "mixflow/momentum.hpp"
#include "mixflow/state.hpp"
#include "mixflow/target.hpp"

namespace mixflow {

// Reference distribution q0 on the augmented space. The position marginal
// is a diagonal Gaussian, optionally pushed through an invertible affine
// map x = A z + b; momentum coordinates are iid from the momentum model and
// the pseudotime coordinate is uniform on [0, 1). Sampling and density
// evaluation are exact.
class AugmentedReference {
 public:
  AugmentedReference(Eigen::VectorXd mean, Eigen::VectorXd scale,
                     MomentumModel momentum);

  // Installs x = A z + b on top of the diagonal Gaussian z-draw. A must be
  // square of matching dimension and invertible.
  void set_affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

  AugmentedState sample(Rng& rng) const;

  double log_density(const AugmentedState& s) const;

  // Log-density of the position marginal alone.
  double log_density_x(const Eigen::VectorXd& x) const;

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }
  const MomentumModel& momentum() const { return momentum_; }
  bool has_affine() const { return affine_.has_value(); }

 private:
  struct Affine {
    Eigen::MatrixXd a;
    Eigen::MatrixXd a_inv;
    Eigen::VectorXd b;
    double log_abs_det;
  };

  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  MomentumModel momentum_;
  std::optional<Affine> affine_;
};

struct MeanFieldFit {
  AugmentedReference reference;
  std::vector<double> elbo_trace;  // one Monte Carlo ELBO value per step
};

// Stochastic mean-field Gaussian fit of the position marginal to the target
// via reparameterized gradients and Adam. Starts from N(0, I); steps == 0
// returns the initialization. Throws OptimizationFailure (carrying the last
// finite iterate) if the objective or iterate diverges.
MeanFieldFit fit_meanfield(const TargetModel& target, MomentumModel momentum,
                           int steps, double step_size, int batch_size,
                           Rng& rng);

}  // namespace mixflow
