#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mixflow/flow.hpp"
#include "mixflow/reference.hpp"
#include "mixflow/target.hpp"

namespace mixflow {

// Mixture of pushforwards of a reference distribution under repeated
// application of a deterministic invertible map T:
//
//   q = (1 / (N - M)) * sum_{n = M}^{N - 1} T^n q0
//
// with N = n_steps and M = burn_in (default 0). Sampling is exact (draw a
// mixture index, push a reference draw through T that many times) and the
// density is exact, evaluated by walking the inverse map and accumulating
// Jacobians. The two ELBO estimators are algebraically identical; the
// second trades the O(N) trajectory buffer for three states advanced in
// lockstep, so its memory use does not grow with N.
class MixFlow {
 public:
  MixFlow(AugmentedReference reference, FlowPtr transform, long n_steps,
          long burn_in = 0);

  // One exact draw: K uniform on {M, ..., N-1}, then T^K applied to a
  // reference draw. K is drawn before the reference point.
  AugmentedState sample(Rng& rng) const;

  // Exact log-density at s (O(N) inverse applications, O(1) memory).
  double log_density(const AugmentedState& s) const;

  struct DensityTriple {
    AugmentedState preimage;  // T^{-(N-1)} s
    double log_density;       // log q(s)
    double sum_log_jac;       // sum of log-Jacobians along the inverse walk
  };

  // log_density plus the by-products of the same inverse walk, which the
  // constant-memory ELBO estimator needs to seed its forward recursion.
  DensityTriple density_triple(const AugmentedState& s) const;

  // Single-trajectory ELBO estimate of E_q[log pbar - log q] against the
  // augmented target. Simulates one trajectory through the draw, stores
  // O(N) scalars, and evaluates every mixture density along it with a
  // sliding log-sum-exp window: O(N) time total instead of the O(N^2) of
  // calling log_density at each trajectory point.
  double estimate_elbo(const AugmentedTarget& target, Rng& rng) const;

  // Same estimator, same single reference draw, evaluated with a constant
  // number of live states regardless of N.
  double estimate_elbo_const_mem(const AugmentedTarget& target,
                                 Rng& rng) const;

  // Unbiased estimate of E_q[f] from one reference draw: the average of f
  // over the n = M..N-1 points of its trajectory.
  double trajectory_average(
      const std::function<double(const AugmentedState&)>& f, Rng& rng) const;

  // ELBO estimates for several burn-in values sharing one simulated
  // trajectory (and one reference draw). Entry i uses burn-in ms[i] with
  // this flow's N; an entry equal to this flow's burn-in reproduces
  // estimate_elbo bit for bit given the same generator state.
  std::vector<double> elbo_vs_burnin(const AugmentedTarget& target,
                                     const std::vector<long>& ms,
                                     Rng& rng) const;

  long n_steps() const { return n_steps_; }
  long burn_in() const { return burn_in_; }
  const AugmentedReference& reference() const { return reference_; }
  const FlowTransform& transform() const { return *transform_; }

 private:
  // Everything the inverse walk from a point can yield in one pass.
  struct SweepResult {
    AugmentedState preimage;          // after N-1 inverse steps
    double lse_weights;               // log sum_{n=M}^{N-1} w_n(s)
    double sum_log_jac;               // all N-1 log-Jacobians
    double lm_window;                 // Jacobian window seeding burn-in > 0
    std::optional<AugmentedState> tail_m;  // burn-in tail traveler seed
  };
  SweepResult backward_sweep(const AugmentedState& s) const;

  // Scalars recorded along one simulated trajectory x_{-(N-1)}..x_{N-1}
  // (index 0 is the reference draw; vectors are offset by N-1).
  struct TrajArrays {
    std::vector<double> log_q0;      // log q0(x_c), c in [-(N-1), N-1]
    std::vector<double> log_jac;     // log J(x_c), c in [-(N-1), N-2]
    std::vector<double> log_target;  // log pbar(x_k), k in [0, N-1]
  };
  TrajArrays simulate_trajectory(const AugmentedTarget& target,
                                 Rng& rng) const;
  double elbo_from_arrays(const TrajArrays& arrays,
                          long burn_in) const;

  void check_state(const AugmentedState& s) const;

  AugmentedReference reference_;
  FlowPtr transform_;
  long n_steps_;
  long burn_in_;
};

struct ElboStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> values;
};

// Mean and standard error of `replicates` independent single-trajectory
// ELBO estimates.
ElboStats replicate_elbo(const MixFlow& flow, const AugmentedTarget& target,
                         int replicates, Rng& rng);

}  // namespace mixflow
