#include "mixflow/diagnostics.hpp"

#include <cmath>

#include "mixflow/errors.hpp"
#include "mixflow/math.hpp"

namespace mixflow {

double ksd_imq(const std::vector<Eigen::VectorXd>& samples,
               const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
                   score,
               double c, double beta) {
  if (samples.empty()) throw InvalidArgument("ksd: empty sample list");
  const std::size_t n = samples.size();
  const auto d = samples[0].size();
  if (d == 0) throw InvalidArgument("ksd: zero-dimensional samples");

  std::vector<Eigen::VectorXd> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].size() != d) {
      throw InvalidArgument("ksd: inconsistent sample dimensions");
    }
    scores[i] = score(samples[i]);
    if (scores[i].size() != d || !scores[i].allFinite()) {
      throw InvalidArgument("ksd: non-finite score at sample " +
                            std::to_string(i));
    }
  }

  const double c2 = c * c;
  const double dd = static_cast<double>(d);
  // Exactly rounded accumulation makes the V-statistic independent of pair
  // ordering, and exactly consistent under duplication of the sample list
  // (the sum scales by a power of two, which commutes with rounding).
  ExactSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::VectorXd diff = samples[i] - samples[j];
      double r2 = diff.squaredNorm();
      double u = c2 + r2;
      double ub = std::pow(u, beta);
      double ub1 = std::pow(u, beta - 1.0);
      double ub2 = std::pow(u, beta - 2.0);
      double trace_term =
          -2.0 * beta * (2.0 * (beta - 1.0) * ub2 * r2 + dd * ub1);
      double cross = 2.0 * beta * ub1 *
                     (diff.dot(scores[j]) - diff.dot(scores[i]));
      double kp = trace_term + cross + ub * scores[i].dot(scores[j]);
      acc.add(kp);
    }
  }
  double total = acc.value();
  if (total < 0.0) total = 0.0;  // rounding guard; the kernel is PSD
  return std::sqrt(total) / static_cast<double>(n);
}

double ess_batch_means(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 10) {
    throw InvalidArgument("ess: need at least 10 points, got " +
                          std::to_string(n));
  }
  bool constant = true;
  for (double v : series) {
    if (v != series[0]) {
      constant = false;
      break;
    }
  }
  if (constant) throw DegenerateInput("ess: constant series");

  const std::size_t b = static_cast<std::size_t>(
      std::floor(std::sqrt(static_cast<double>(n))));
  const std::size_t a = n / b;  // full batches, taken from the head

  double grand = 0.0;
  for (std::size_t k = 0; k < a * b; ++k) grand += series[k];
  grand /= static_cast<double>(a * b);

  double between = 0.0;
  for (std::size_t k = 0; k < a; ++k) {
    double bm = 0.0;
    for (std::size_t t = 0; t < b; ++t) bm += series[k * b + t];
    bm /= static_cast<double>(b);
    between += (bm - grand) * (bm - grand);
  }
  // Long-run variance estimate: b / (a - 1) * sum (batch mean - grand)^2.
  double sigma2 = static_cast<double>(b) * between / static_cast<double>(a - 1);
  if (sigma2 == 0.0) {
    throw DegenerateInput("ess: batch means are all equal");
  }
  double s2 = sample_variance(series);
  double ess = static_cast<double>(n) * s2 / sigma2;
  return std::max(ess, 1.0);
}

StabilityProfile stability_profile(const FlowTransform& flow,
                                   const AugmentedReference& reference,
                                   const std::vector<long>& ks, int n_draws,
                                   Rng& rng) {
  if (ks.empty()) throw InvalidArgument("stability: empty K list");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 0 || (i > 0 && ks[i] <= ks[i - 1])) {
      throw InvalidArgument("stability: K values must be ascending and >= 0");
    }
  }
  if (n_draws < 1) throw InvalidArgument("stability: need draws");

  std::vector<std::vector<double>> fwd_err(ks.size()), inv_err(ks.size());

  for (int draw = 0; draw < n_draws; ++draw) {
    AugmentedState s0 = reference.sample(rng);

    // Walk out to each requested K along one trajectory, then walk back the
    // same number of steps and measure the return distance. A divergence
    // anywhere past K poisons only the larger-K entries of that direction.
    for (int direction = 0; direction < 2; ++direction) {
      bool out_forward = direction == 0;
      auto& errs = out_forward ? fwd_err : inv_err;
      AugmentedState cur = s0;
      long reached = 0;
      bool dead = false;
      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        long k = ks[ki];
        if (!dead) {
          try {
            for (; reached < k; ++reached) {
              cur = out_forward ? flow.forward(cur).first
                                : flow.inverse(cur).first;
            }
          } catch (const NumericalDivergence&) {
            dead = true;
          }
        }
        if (dead) {
          errs[ki].push_back(kInf);
          continue;
        }
        if (k == 0) {
          errs[ki].push_back(0.0);
          continue;
        }
        try {
          AugmentedState back = cur;
          for (long j = 0; j < k; ++j) {
            back = out_forward ? flow.inverse(back).first
                               : flow.forward(back).first;
          }
          errs[ki].push_back(l2_diff(back, s0));
        } catch (const NumericalDivergence&) {
          errs[ki].push_back(kInf);
        }
      }
    }
  }

  StabilityProfile profile(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    StabilityRecord& rec = profile[ki];
    rec.k = ks[ki];
    rec.fwd_inv_q25 = quantile_linear(fwd_err[ki], 0.25);
    rec.fwd_inv_q50 = quantile_linear(fwd_err[ki], 0.50);
    rec.fwd_inv_q75 = quantile_linear(fwd_err[ki], 0.75);
    rec.inv_fwd_q25 = quantile_linear(inv_err[ki], 0.25);
    rec.inv_fwd_q50 = quantile_linear(inv_err[ki], 0.50);
    rec.inv_fwd_q75 = quantile_linear(inv_err[ki], 0.75);
  }
  return profile;
}

EstimatorComparison compare_estimators(
    const MixFlow& flow,
    const std::function<double(const AugmentedState&)>& f, long eval_budget,
    int trials, Rng& rng) {
  const long n = flow.n_steps();
  if (n < 2) {
    throw InvalidArgument(
        "compare_estimators: flow must have n_steps >= 2 (independent draws "
        "of a length-1 flow consume no budget)");
  }
  if (eval_budget < n) {
    throw InvalidArgument(
        "compare_estimators: budget smaller than one trajectory");
  }
  if (trials < 2) {
    throw InvalidArgument("compare_estimators: need at least two trials");
  }

  const long m = flow.burn_in();
  const long traj_draws = eval_budget / (n - 1);
  std::vector<double> iid_est, traj_est;
  iid_est.reserve(static_cast<std::size_t>(trials));
  traj_est.reserve(static_cast<std::size_t>(trials));
  double iid_draws_total = 0.0;

  for (int t = 0; t < trials; ++t) {
    double acc = 0.0;
    long draws = 0;
    long cost = 0;
    while (cost < eval_budget) {
      long k = m;
      if (n - m > 1) {
        k += static_cast<long>(
            uniform_below(rng, static_cast<std::uint64_t>(n - m)));
      }
      AugmentedState s = flow.reference().sample(rng);
      for (long i = 0; i < k; ++i) s = flow.transform().forward(s).first;
      acc += f(s);
      ++draws;
      cost += k;
    }
    iid_est.push_back(acc / static_cast<double>(draws));
    iid_draws_total += static_cast<double>(draws);

    double tacc = 0.0;
    for (long r = 0; r < traj_draws; ++r) {
      tacc += flow.trajectory_average(f, rng);
    }
    traj_est.push_back(tacc / static_cast<double>(traj_draws));
  }

  EstimatorComparison cmp;
  cmp.iid_mean = mean_of(iid_est);
  cmp.iid_variance = sample_variance(iid_est);
  cmp.traj_mean = mean_of(traj_est);
  cmp.traj_variance = sample_variance(traj_est);
  cmp.iid_draws_per_trial = iid_draws_total / static_cast<double>(trials);
  cmp.traj_draws_per_trial = static_cast<double>(traj_draws);
  return cmp;
}

}  // namespace mixflow
