#include "mixflow/mixflow.hpp"

#include <cmath>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

MixFlow::MixFlow(AugmentedReference reference, FlowPtr transform, long n_steps,
                 long burn_in)
    : reference_(std::move(reference)),
      transform_(std::move(transform)),
      n_steps_(n_steps),
      burn_in_(burn_in) {
  if (!transform_) throw InvalidArgument("mixflow: transform must be set");
  if (n_steps_ < 1) throw InvalidArgument("mixflow: n_steps must be >= 1");
  if (burn_in_ < 0 || burn_in_ >= n_steps_) {
    throw InvalidArgument("mixflow: burn-in must satisfy 0 <= M < N");
  }
  if (reference_.dim() != transform_->dim()) {
    throw InvalidArgument("mixflow: reference/transform dimension mismatch");
  }
}

void MixFlow::check_state(const AugmentedState& s) const {
  validate_state(s);
  if (s.dim() != reference_.dim()) {
    throw InvalidArgument("mixflow: state dimension mismatch");
  }
  if (!s.finite()) throw InvalidArgument("mixflow: non-finite state");
}

AugmentedState MixFlow::sample(Rng& rng) const {
  long range = n_steps_ - burn_in_;
  long k = burn_in_;
  // The mixture index is drawn before the reference point; when the range
  // collapses to one index no randomness is consumed for it.
  if (range > 1) {
    k += static_cast<long>(
        uniform_below(rng, static_cast<std::uint64_t>(range)));
  }
  AugmentedState s = reference_.sample(rng);
  for (long i = 0; i < k; ++i) s = transform_->forward(s).first;
  return s;
}

MixFlow::SweepResult MixFlow::backward_sweep(const AugmentedState& s) const {
  const long n = n_steps_;
  const long m = burn_in_;
  double lse = m == 0 ? reference_.log_density(s) : -kInf;
  double cum_log_jac = 0.0;
  double lm_window = 0.0;
  AugmentedState cur = s;
  std::optional<AugmentedState> tail_m;
  if (m == 1) tail_m = cur;
  for (long step = 1; step <= n - 1; ++step) {
    double lj = 0.0;
    try {
      auto [prev, step_lj] = transform_->inverse(cur);
      cur = std::move(prev);
      lj = step_lj;
      cum_log_jac += lj;
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence("inverse application " + std::to_string(step) +
                                    " of the mixture walk failed: " + e.what(),
                                step);
    }
    if (step >= m) {
      lse = log_add_exp(lse, reference_.log_density(cur) - cum_log_jac);
    }
    if (m >= 2 && step <= m - 1) {
      lm_window += lj;
      if (step == m - 1) tail_m = cur;
    }
  }
  return {std::move(cur), lse, cum_log_jac, lm_window, std::move(tail_m)};
}

double MixFlow::log_density(const AugmentedState& s) const {
  check_state(s);
  return backward_sweep(s).lse_weights -
         std::log(static_cast<double>(n_steps_ - burn_in_));
}

MixFlow::DensityTriple MixFlow::density_triple(const AugmentedState& s) const {
  check_state(s);
  SweepResult sweep = backward_sweep(s);
  double ld = sweep.lse_weights -
              std::log(static_cast<double>(n_steps_ - burn_in_));
  return {std::move(sweep.preimage), ld, sweep.sum_log_jac};
}

MixFlow::TrajArrays MixFlow::simulate_trajectory(const AugmentedTarget& target,
                                                 Rng& rng) const {
  const long n = n_steps_;
  const long off = n - 1;
  TrajArrays arr;
  arr.log_q0.resize(static_cast<std::size_t>(2 * n - 1));
  arr.log_jac.resize(static_cast<std::size_t>(2 * n - 2));
  arr.log_target.resize(static_cast<std::size_t>(n));

  AugmentedState s0 = reference_.sample(rng);
  arr.log_q0[static_cast<std::size_t>(off)] = reference_.log_density(s0);
  arr.log_target[0] = target.log_density(s0);

  AugmentedState cur = s0;
  for (long c = -1; c >= -(n - 1); --c) {
    try {
      auto [prev, lj] = transform_->inverse(cur);
      cur = std::move(prev);
      arr.log_jac[static_cast<std::size_t>(c + off)] = lj;
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence(
          "inverse application " + std::to_string(-c) +
              " of the trajectory walk failed: " + e.what(),
          -c);
    }
    arr.log_q0[static_cast<std::size_t>(c + off)] = reference_.log_density(cur);
  }
  cur = s0;
  for (long c = 1; c <= n - 1; ++c) {
    try {
      auto [next, lj] = transform_->forward(cur);
      arr.log_jac[static_cast<std::size_t>(c - 1 + off)] = lj;
      cur = std::move(next);
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence(
          "forward application " + std::to_string(c) +
              " of the trajectory walk failed: " + e.what(),
          c);
    }
    arr.log_q0[static_cast<std::size_t>(c + off)] = reference_.log_density(cur);
    arr.log_target[static_cast<std::size_t>(c)] = target.log_density(cur);
  }
  return arr;
}

// One pass over the trajectory with a sliding log-sum-exp window.
//
// With trajectory points x_c (c = 0 the reference draw) and the shorthand
// P(c) = sum of log-Jacobians up to x_{c-1}, the n-th mixture term of the
// density at x_k is q0(x_{k-n}) / prod_{j=1..n} J(x_{k-j}); in log space
// it is g(k-n) - P(k) with g(c) = log q0(x_c) + P(c). So the density at
// x_k needs the log-sum-exp of g over a window of n - m consecutive c
// values, and stepping k -> k+1 slides that window by one.
double MixFlow::elbo_from_arrays(const TrajArrays& arr, long burn_in) const {
  const long n = n_steps_;
  const long m = burn_in;
  const long off = n - 1;
  const double log_nm = std::log(static_cast<double>(n - m));

  // P[j] = sum of the first j log-Jacobian entries; P(c) = P[c + off].
  std::vector<double> prefix(static_cast<std::size_t>(2 * n - 1));
  prefix[0] = 0.0;
  for (std::size_t j = 1; j < prefix.size(); ++j) {
    prefix[j] = prefix[j - 1] + arr.log_jac[j - 1];
  }
  auto g = [&](long c) {
    return arr.log_q0[static_cast<std::size_t>(c + off)] +
           prefix[static_cast<std::size_t>(c + off)];
  };

  // Initialize the window for k = m: c in [m - n + 1, 0].
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(n - m));
  for (long c = m - n + 1; c <= 0; ++c) window.push_back(g(c));
  double lw = log_sum_exp(window);

  double elbo = arr.log_target[static_cast<std::size_t>(m)] -
                (lw - prefix[static_cast<std::size_t>(m + off)] - log_nm);
  for (long k = m + 1; k <= n - 1; ++k) {
    lw = log_add_exp(log_sub_exp(lw, g(k - n)), g(k - m));
    elbo += arr.log_target[static_cast<std::size_t>(k)] -
            (lw - prefix[static_cast<std::size_t>(k + off)] - log_nm);
  }
  return elbo / static_cast<double>(n - m);
}

double MixFlow::estimate_elbo(const AugmentedTarget& target, Rng& rng) const {
  TrajArrays arr = simulate_trajectory(target, rng);
  return elbo_from_arrays(arr, burn_in_);
}

double MixFlow::estimate_elbo_const_mem(const AugmentedTarget& target,
                                        Rng& rng) const {
  const long n = n_steps_;
  const long m = burn_in_;
  const double log_nm = std::log(static_cast<double>(n - m));

  AugmentedState front = reference_.sample(rng);
  for (long i = 0; i < m; ++i) front = transform_->forward(front).first;

  // Seed everything from one inverse walk at x_m: the mixture weight there,
  // the tail traveler x_{m-n+1}, the burn-in traveler x_1, and the two
  // sliding Jacobian-window sums.
  SweepResult sweep = backward_sweep(front);
  double lw = sweep.lse_weights;
  double elbo = target.log_density(front) - (lw - log_nm);
  AugmentedState tail_n = std::move(sweep.preimage);
  std::optional<AugmentedState> tail_m = std::move(sweep.tail_m);
  double ln_window = sweep.sum_log_jac;  // log-Jacobians at x_{k-n}..x_{k-2}
  double lm_window = sweep.lm_window;    // log-Jacobians at x_{k-m}..x_{k-2}

  for (long k = m + 1; k <= n - 1; ++k) {
    // Oldest mixture term of the previous window, valued at x_{k-n}.
    double lold = reference_.log_density(tail_n) - ln_window;
    auto [tail_n_next, lj_tail_n] = transform_->forward(tail_n);
    tail_n = std::move(tail_n_next);

    double lj_front;
    if (m >= 1) {
      double lnew = reference_.log_density(*tail_m) - lm_window;
      auto [front_next, ljf] = transform_->forward(front);
      lj_front = ljf;
      front = std::move(front_next);
      lw = log_add_exp(log_sub_exp(lw, lold), lnew) - lj_front;
      auto [tail_m_next, lj_tail_m] = transform_->forward(*tail_m);
      tail_m = std::move(tail_m_next);
      lm_window += lj_front - lj_tail_m;
    } else {
      auto [front_next, ljf] = transform_->forward(front);
      lj_front = ljf;
      front = std::move(front_next);
      lw = log_add_exp(log_sub_exp(lw, lold) - lj_front,
                       reference_.log_density(front));
    }
    ln_window += lj_front - lj_tail_n;
    elbo += target.log_density(front) - (lw - log_nm);
  }
  return elbo / static_cast<double>(n - m);
}

double MixFlow::trajectory_average(
    const std::function<double(const AugmentedState&)>& f, Rng& rng) const {
  AugmentedState s = reference_.sample(rng);
  for (long i = 0; i < burn_in_; ++i) s = transform_->forward(s).first;
  double acc = f(s);
  for (long k = burn_in_ + 1; k <= n_steps_ - 1; ++k) {
    s = transform_->forward(s).first;
    acc += f(s);
  }
  return acc / static_cast<double>(n_steps_ - burn_in_);
}

std::vector<double> MixFlow::elbo_vs_burnin(const AugmentedTarget& target,
                                            const std::vector<long>& ms,
                                            Rng& rng) const {
  for (long m : ms) {
    if (m < 0 || m >= n_steps_) {
      throw InvalidArgument("elbo_vs_burnin: burn-in " + std::to_string(m) +
                            " outside [0, " + std::to_string(n_steps_) + ")");
    }
  }
  TrajArrays arr = simulate_trajectory(target, rng);
  std::vector<double> out;
  out.reserve(ms.size());
  for (long m : ms) out.push_back(elbo_from_arrays(arr, m));
  return out;
}

ElboStats replicate_elbo(const MixFlow& flow, const AugmentedTarget& target,
                         int replicates, Rng& rng) {
  if (replicates < 1) {
    throw InvalidArgument("replicate_elbo: need at least one replicate");
  }
  ElboStats stats;
  stats.values.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    stats.values.push_back(flow.estimate_elbo(target, rng));
  }
  stats.mean = mean_of(stats.values);
  stats.std_error = stats.values.size() > 1
                        ? std::sqrt(sample_variance(stats.values) /
                                    static_cast<double>(stats.values.size()))
                        : 0.0;
  return stats;
}

}  // namespace mixflow
