#pragma once

#include <functional>

#include "mixflow/flow.hpp"
#include "mixflow/target.hpp"

namespace mixflow {

inline constexpr double kDefaultXi = 0.19634954084936207740;  // pi / 16

// One half of the measure-preserving pair below: L leapfrog steps of the
// Hamiltonian for log pi(x) + log m(rho). Forward integrates with step
// epsilon; inverse runs the reversed sub-updates with -epsilon, which is the
// exact algebraic inverse of the forward composition. Mutates x, rho.
// epsilon = 0 degenerates to the identity map (the flow classes reject it,
// but the bare integrator is continuous there).
void leapfrog(Eigen::VectorXd& x, Eigen::VectorXd& rho,
              const AugmentedTarget& target, double epsilon, int n_steps,
              Direction dir);

// u -> (u + xi) mod 1 (forward) or (u - xi) mod 1 (inverse).
double pseudotime_shift(double u, double xi, Direction dir);

// Phase function driving the momentum refreshment; maps into [0, 1].
using RefreshFn = std::function<double(double, double)>;
double default_refresh(double x, double u);

// Per-coordinate momentum refreshment through the momentum CDF:
//   rho_i -> Qm( (Cm(rho_i) + z(x_i, u)) mod 1 )
// and the reverse subtracts z before mapping back. Returns the log-Jacobian
// contribution log m(rho_in) - log m(rho_out) of the forward map; for the
// inverse direction the returned value is the forward log-Jacobian at the
// recovered preimage, i.e. log m(rho_out) - log m(rho_in).
double refresh_momentum(Eigen::VectorXd& rho, const Eigen::VectorXd& x,
                        double u, const MomentumModel& momentum,
                        const RefreshFn& z, Direction dir);

struct HamFlowParams {
  double epsilon = 0.05;
  int n_leapfrog = 50;
  double xi = kDefaultXi;
  RefreshFn refresh = default_refresh;
};

// Deterministic transition kernel: leapfrog burst, pseudotime shift, then
// momentum refreshment keyed on the new (x, u). Leapfrog and the shift are
// volume preserving, so the refreshment supplies the whole Jacobian.
class HamiltonianFlow : public FlowTransform {
 public:
  HamiltonianFlow(HamFlowParams params, TargetPtr target,
                  MomentumModel momentum);

  Eigen::Index dim() const override { return target_.base().dim(); }
  std::pair<AugmentedState, double> forward(
      const AugmentedState& s) const override;
  std::pair<AugmentedState, double> inverse(
      const AugmentedState& s) const override;

  const HamFlowParams& params() const { return params_; }
  const AugmentedTarget& target() const { return target_; }

 private:
  HamFlowParams params_;
  AugmentedTarget target_;
};

}  // namespace mixflow
