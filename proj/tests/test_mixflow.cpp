#include <atomic>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <new>
#include <vector>

#include "doctest.h"
#include "mixflow/hamflow.hpp"
#include "mixflow/mixflow.hpp"
#include "mixflow/rng.hpp"
#include "mixflow/synthetic.hpp"
#include "util.hpp"

using namespace mixflow;
namespace ref = testutil::ref;

// ---------------------------------------------------------------------------
// Heap probe. The replaceable global allocation functions are swapped for
// versions that track live and peak bytes, so tests can assert that the
// constant-memory estimator's footprint does not grow with the flow length
// while the buffered one's does. Eigen blocks go through malloc and are not
// counted; the trajectory buffers under test are std::vectors, which are.
namespace heap_probe {
std::atomic<long long> live{0};
std::atomic<long long> peak{0};

void add(long long delta) {
  long long now = live.fetch_add(delta, std::memory_order_relaxed) + delta;
  long long p = peak.load(std::memory_order_relaxed);
  while (now > p &&
         !peak.compare_exchange_weak(p, now, std::memory_order_relaxed)) {
  }
}

void reset_peak() {
  peak.store(live.load(std::memory_order_relaxed), std::memory_order_relaxed);
}
}  // namespace heap_probe

namespace {
constexpr std::size_t kProbeHeader = alignof(std::max_align_t);
}

void* operator new(std::size_t n) {
  void* raw = std::malloc(n + kProbeHeader);
  if (!raw) throw std::bad_alloc();
  *static_cast<std::size_t*>(raw) = n;
  heap_probe::add(static_cast<long long>(n));
  return static_cast<char*>(raw) + kProbeHeader;
}

void operator delete(void* p) noexcept {
  if (!p) return;
  char* raw = static_cast<char*>(p) - kProbeHeader;
  heap_probe::add(-static_cast<long long>(
      *reinterpret_cast<std::size_t*>(raw)));
  std::free(raw);
}

void operator delete(void* p, std::size_t) noexcept { ::operator delete(p); }
void* operator new[](std::size_t n) { return ::operator new(n); }
void operator delete[](void* p) noexcept { ::operator delete(p); }
void operator delete[](void* p, std::size_t) noexcept { ::operator delete(p); }

// ---------------------------------------------------------------------------

namespace {

AugmentedReference plain_ref(Eigen::Index d, double mean = 0.0,
                             double scale = 1.0,
                             MomentumKind kind = MomentumKind::kLaplace) {
  return AugmentedReference(Eigen::VectorXd::Constant(d, mean),
                            Eigen::VectorXd::Constant(d, scale),
                            MomentumModel(kind));
}

AugmentedState state1(double x, double rho, double u) {
  Eigen::VectorXd xv(1), rv(1);
  xv << x;
  rv << rho;
  return AugmentedState(xv, rv, u);
}

// independent log-sum-exp for oracles
double lse_of(const std::vector<double>& v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double t : v) hi = std::max(hi, t);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double t : v) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

AugmentedTarget gauss_aug() {
  return AugmentedTarget(make_gauss1d(), MomentumModel(MomentumKind::kLaplace));
}

FlowPtr ham_flow_1d(double epsilon = 0.1, int n_leapfrog = 5) {
  HamFlowParams p;
  p.epsilon = epsilon;
  p.n_leapfrog = n_leapfrog;
  return std::make_shared<HamiltonianFlow>(p, make_gauss1d(),
                                           MomentumModel(MomentumKind::kLaplace));
}

}  // namespace

TEST_CASE("mixture construction validates its arguments") {
  auto id = std::make_shared<IdentityTransform>(1);
  CHECK_NOTHROW(MixFlow(plain_ref(1), id, 1));
  CHECK_THROWS_AS(MixFlow(plain_ref(1), id, 0), InvalidArgument);
  CHECK_THROWS_AS(MixFlow(plain_ref(1), id, 5, -1), InvalidArgument);
  CHECK_THROWS_AS(MixFlow(plain_ref(1), id, 5, 5), InvalidArgument);
  CHECK_THROWS_AS(MixFlow(plain_ref(1), nullptr, 5), InvalidArgument);
  CHECK_THROWS_AS(MixFlow(plain_ref(2), id, 5), InvalidArgument);
}

TEST_CASE("single-component mixture samples exactly like the reference") {
  MixFlow flow(plain_ref(1), std::make_shared<IdentityTransform>(1), 1);
  Rng r1 = make_stream(701, 0, 0);
  Rng r2 = make_stream(701, 0, 0);
  for (int i = 0; i < 20; ++i) {
    AugmentedState a = flow.sample(r1);
    AugmentedState b = flow.reference().sample(r2);
    CHECK(max_abs_diff(a, b) == 0.0);
  }
}

TEST_CASE("sampling draws the mixture index before the reference point") {
  Eigen::VectorXd delta(1);
  delta << 1.0;
  auto shift = std::make_shared<testutil::TranslationTransform>(delta);
  MixFlow flow(plain_ref(1), shift, 8);
  Rng r1 = make_stream(702, 0, 0);
  Rng r2 = make_stream(702, 0, 0);
  for (int i = 0; i < 50; ++i) {
    AugmentedState got = flow.sample(r1);
    long k = static_cast<long>(uniform_below(r2, 8));
    AugmentedState want = flow.reference().sample(r2);
    // add 1.0 k times, not k once: repeated application rounds differently
    for (long j = 0; j < k; ++j) want.x[0] += 1.0;
    CHECK(max_abs_diff(got, want) == 0.0);
  }
}

TEST_CASE("mixture indices are uniform over the active range") {
  // a tiny reference scale makes the index recoverable from the draw
  Eigen::VectorXd delta(1);
  delta << 1.0;
  auto shift = std::make_shared<testutil::TranslationTransform>(delta);

  MixFlow flow(plain_ref(1, 0.0, 1e-3), shift, 8);
  Rng rng = make_stream(703, 0, 0);
  std::vector<long> counts(8, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    long k = std::lround(flow.sample(rng).x[0]);
    REQUIRE(k >= 0);
    REQUIRE(k <= 7);
    ++counts[static_cast<std::size_t>(k)];
  }
  double expect = n / 8.0, stat = 0.0;
  for (long c : counts) {
    double d = c - expect;
    stat += d * d / expect;
  }
  CHECK(stat < ref::kChi2Crit99Df7);

  // with burn-in the index never drops below it
  MixFlow burned(plain_ref(1, 0.0, 1e-3), shift, 8, 3);
  std::vector<long> bcounts(5, 0);
  long kmin = 100, kmax = -1;
  for (int i = 0; i < n; ++i) {
    long k = std::lround(burned.sample(rng).x[0]);
    REQUIRE(k >= 3);
    REQUIRE(k <= 7);
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
    ++bcounts[static_cast<std::size_t>(k - 3)];
  }
  CHECK(kmin == 3);
  CHECK(kmax == 7);
  expect = n / 5.0;
  stat = 0.0;
  for (long c : bcounts) {
    double d = c - expect;
    stat += d * d / expect;
  }
  CHECK(stat < ref::kChi2Crit99Df4);
}

TEST_CASE("density of a single-component mixture is the reference density") {
  MixFlow flow(plain_ref(1), std::make_shared<IdentityTransform>(1), 1);
  AugmentedState s = state1(0.3, -1.2, 0.4);
  CHECK(flow.log_density(s) == flow.reference().log_density(s));
}

TEST_CASE("identity transform mixture keeps the reference density for any length") {
  MixFlow flow(plain_ref(2), std::make_shared<IdentityTransform>(2), 17);
  Rng rng = make_stream(704, 0, 0);
  for (int i = 0; i < 20; ++i) {
    AugmentedState s = flow.reference().sample(rng);
    CHECK(std::abs(flow.log_density(s) - flow.reference().log_density(s)) < 1e-12);
  }
}

TEST_CASE("mixture density matches the scaling-map closed form") {
  Eigen::VectorXd a(2);
  a << 1.15, 0.9;
  auto scaling = std::make_shared<testutil::ScalingTransform>(a);
  const long n_steps = 12, burn = 3;
  MixFlow flow(plain_ref(2), scaling, n_steps, burn);

  Rng rng = make_stream(705, 0, 0);
  for (int i = 0; i < 25; ++i) {
    AugmentedState s = flow.sample(rng);
    std::vector<double> terms;
    for (long n = burn; n < n_steps; ++n) {
      double t = 0.0;
      for (int c = 0; c < 2; ++c) {
        t += normal_log_pdf(s.x[c] / std::pow(a[c], static_cast<double>(n)));
        t += laplace_log_pdf(s.rho[c]);
      }
      t -= static_cast<double>(n) * scaling->log_jacobian();
      terms.push_back(t);
    }
    double want = lse_of(terms) - std::log(static_cast<double>(n_steps - burn));
    double got = flow.log_density(s);
    CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("hamiltonian mixture density matches a step-by-step evaluation") {
  MixFlow flow(plain_ref(1), ham_flow_1d(), 10);
  Rng rng = make_stream(706, 0, 0);
  for (int i = 0; i < 10; ++i) {
    AugmentedState s = flow.sample(rng);
    std::vector<double> terms{flow.reference().log_density(s)};
    AugmentedState cur = s;
    double cum = 0.0;
    for (long n = 1; n < 10; ++n) {
      auto [prev, lj] = flow.transform().inverse(cur);
      cur = prev;
      cum += lj;
      terms.push_back(flow.reference().log_density(cur) - cum);
    }
    double want = lse_of(terms) - std::log(10.0);
    double got = flow.log_density(s);
    CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("density triple degenerates correctly at length one") {
  MixFlow flow(plain_ref(1), ham_flow_1d(), 1);
  AugmentedState s = state1(0.7, 0.2, 0.9);
  auto triple = flow.density_triple(s);
  CHECK(max_abs_diff(triple.preimage, s) == 0.0);
  CHECK(triple.log_density == flow.reference().log_density(s));
  CHECK(triple.sum_log_jac == 0.0);
}

TEST_CASE("density triple reports the true preimage and jacobian sum") {
  MixFlow flow(plain_ref(1), ham_flow_1d(), 7);
  Rng rng = make_stream(707, 0, 0);
  for (int i = 0; i < 10; ++i) {
    AugmentedState s = flow.sample(rng);
    auto triple = flow.density_triple(s);
    CHECK(triple.log_density == flow.log_density(s));

    AugmentedState cur = s;
    double cum = 0.0;
    for (long n = 1; n <= 6; ++n) {
      auto [prev, lj] = flow.transform().inverse(cur);
      cur = prev;
      cum += lj;
    }
    CHECK(max_abs_diff(triple.preimage, cur) == 0.0);
    CHECK(std::abs(triple.sum_log_jac - cum) <= 1e-10 * std::max(1.0, std::abs(cum)));
    // pushing the preimage forward N-1 times returns to s
    AugmentedState fwd = triple.preimage;
    for (long n = 0; n < 6; ++n) fwd = flow.transform().forward(fwd).first;
    CHECK(max_abs_diff(fwd, s) < 1e-8);
  }
}

TEST_CASE("elbo vanishes when the mixture already equals the target") {
  AugmentedTarget target(make_gauss1d(), MomentumModel(MomentumKind::kLaplace));
  for (long n : {1L, 7L, 20L}) {
    MixFlow flow(plain_ref(1, 2.0, 2.0), std::make_shared<IdentityTransform>(1), n);
    Rng rng = make_stream(708, n, 0);
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(flow.estimate_elbo(target, rng)) < 1e-12);
    }
  }
}

TEST_CASE("single-step elbo is the log density ratio at the reference draw") {
  MixFlow flow(plain_ref(1), std::make_shared<IdentityTransform>(1), 1);
  AugmentedTarget target = gauss_aug();
  Rng r1 = make_stream(709, 0, 0);
  Rng r2 = make_stream(709, 0, 0);
  double got = flow.estimate_elbo(target, r1);
  AugmentedState s = flow.reference().sample(r2);
  double want = target.log_density(s) - flow.reference().log_density(s);
  CHECK(got == want);
}

TEST_CASE("sliding-window elbo matches the quadratic-cost evaluation") {
  auto banana = make_banana();
  AugmentedTarget target(banana, MomentumModel(MomentumKind::kLaplace));
  HamFlowParams p;
  p.epsilon = 0.05;
  p.n_leapfrog = 10;
  auto flow_map = std::make_shared<HamiltonianFlow>(
      p, banana, MomentumModel(MomentumKind::kLaplace));

  // Reference on the banana ridge keeps the trajectory numerically
  // invertible; the quadratic-cost evaluation re-inverts the walk, so the
  // two sides only agree where round trips are tight.
  Eigen::VectorXd ref_mean(2), ref_scale(2);
  ref_mean << 0.0, -9.5;
  ref_scale << 2.2, 0.95;

  for (long burn : {0L, 4L}) {
    const long n_steps = 20;
    MixFlow flow(AugmentedReference(ref_mean, ref_scale,
                                    MomentumModel(MomentumKind::kLaplace)),
                 flow_map, n_steps, burn);
    Rng r1 = make_stream(710, burn, 0);
    Rng r2 = make_stream(710, burn, 0);
    double got = flow.estimate_elbo(target, r1);

    AugmentedState s = flow.reference().sample(r2);
    for (long i = 0; i < burn; ++i) s = flow_map->forward(s).first;
    double acc = 0.0;
    long count = 0;
    AugmentedState cur = s;
    for (long k = burn; k < n_steps; ++k) {
      if (k > burn) cur = flow_map->forward(cur).first;
      acc += target.log_density(cur) - flow.log_density(cur);
      ++count;
    }
    double want = acc / static_cast<double>(count);
    CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("buffered and constant-memory elbo estimators agree") {
  AugmentedTarget target = gauss_aug();
  Eigen::VectorXd a(1);
  a << 1.07;
  std::vector<std::pair<FlowPtr, const char*>> maps = {
      {std::make_shared<IdentityTransform>(1), "identity"},
      {std::make_shared<testutil::ScalingTransform>(a), "scaling"},
      {ham_flow_1d(0.05, 3), "hamiltonian"},
  };
  for (auto& [map, label] : maps) {
    for (long n : {1L, 2L, 3L, 10L, 100L}) {
      for (long burn : std::vector<long>{0L, n > 1 ? 1L : 0L, n / 3}) {
        if (burn >= n) continue;
        MixFlow flow(plain_ref(1), map, n, burn);
        Rng r1 = make_stream(711, n, burn);
        Rng r2 = make_stream(711, n, burn);
        double buffered = flow.estimate_elbo(target, r1);
        double constant = flow.estimate_elbo_const_mem(target, r2);
        INFO(label, " n=", n, " burn=", burn);
        CHECK(std::abs(buffered - constant) < 1e-6);
      }
    }
  }
}

TEST_CASE("constant-memory estimator keeps a flat state and heap footprint") {
  AugmentedTarget target = gauss_aug();
  auto probe = [&](long n, bool const_mem) {
    MixFlow flow(plain_ref(1), ham_flow_1d(0.05, 2), n);
    Rng rng = make_stream(712, n, const_mem ? 1 : 0);
    long live_states = AugmentedState::live_instances();
    AugmentedState::reset_peak();
    long long live_bytes = heap_probe::live.load(std::memory_order_relaxed);
    heap_probe::reset_peak();
    double v = const_mem ? flow.estimate_elbo_const_mem(target, rng)
                         : flow.estimate_elbo(target, rng);
    (void)v;
    long state_delta = AugmentedState::peak_instances() - live_states;
    long long byte_delta =
        heap_probe::peak.load(std::memory_order_relaxed) - live_bytes;
    return std::pair<long, long long>(state_delta, byte_delta);
  };

  auto [s10, b10] = probe(10, true);
  auto [s100, b100] = probe(100, true);
  auto [s1000, b1000] = probe(1000, true);
  // identical transient state count and no byte growth as N scales 100x
  CHECK(s100 == s10);
  CHECK(s1000 == s10);
  CHECK(b1000 <= b10 + 512);
  CHECK(b100 <= b10 + 512);

  // the buffered estimator's trajectory arrays grow linearly
  auto [sb10, bb10] = probe(10, false);
  auto [sb1000, bb1000] = probe(1000, false);
  (void)sb10;
  (void)sb1000;
  CHECK(bb1000 - bb10 >= 8LL * 4LL * 990LL);
}

TEST_CASE("trajectory average of a constant is that constant") {
  MixFlow flow(plain_ref(1), ham_flow_1d(), 7);
  Rng rng = make_stream(713, 0, 0);
  double got = flow.trajectory_average(
      [](const AugmentedState&) { return 2.5; }, rng);
  CHECK(got == 2.5);
}

TEST_CASE("length-one trajectory average evaluates f at the reference draw") {
  MixFlow flow(plain_ref(1), ham_flow_1d(), 1);
  Rng r1 = make_stream(714, 0, 0);
  Rng r2 = make_stream(714, 0, 0);
  double got = flow.trajectory_average(
      [](const AugmentedState& s) { return s.x[0]; }, r1);
  CHECK(got == flow.reference().sample(r2).x[0]);
}

TEST_CASE("trajectory averages and direct mixture draws estimate the same mean") {
  // two-sample comparison of E[f] under the mixture: R trajectory averages
  // against R single draws, pooled standard error
  auto banana = make_banana();
  HamFlowParams p;
  p.epsilon = 0.05;
  p.n_leapfrog = 10;
  auto map = std::make_shared<HamiltonianFlow>(p, banana,
                                               MomentumModel(MomentumKind::kLaplace));
  MixFlow flow(plain_ref(2), map, 50);
  auto f = [](const AugmentedState& s) { return s.x.cwiseAbs().sum(); };

  const int reps = 5000;
  Rng r1 = make_stream(715, 0, 0);
  Rng r2 = make_stream(716, 0, 0);
  std::vector<double> traj(reps), direct(reps);
  for (int i = 0; i < reps; ++i) traj[static_cast<std::size_t>(i)] = flow.trajectory_average(f, r1);
  for (int i = 0; i < reps; ++i) direct[static_cast<std::size_t>(i)] = f(flow.sample(r2));

  double mt = mean_of(traj), md = mean_of(direct);
  double se = std::sqrt(sample_variance(traj) / reps + sample_variance(direct) / reps);
  CHECK(std::abs(mt - md) < 3.0 * se);
}

TEST_CASE("burn-in elbo sweep shares one trajectory and reproduces fresh flows") {
  AugmentedTarget target = gauss_aug();
  auto map = ham_flow_1d(0.08, 4);
  MixFlow flow(plain_ref(1), map, 8);
  std::vector<long> ms{0, 3, 5};
  Rng r = make_stream(717, 0, 0);
  std::vector<double> out = flow.elbo_vs_burnin(target, ms, r);
  REQUIRE(out.size() == 3);

  // each entry equals the single-burn-in estimator started from the same
  // generator state
  for (std::size_t i = 0; i < ms.size(); ++i) {
    MixFlow single(plain_ref(1), map, 8, ms[i]);
    Rng ri = make_stream(717, 0, 0);
    CHECK(out[i] == single.estimate_elbo(target, ri));
  }

  CHECK_THROWS_AS((void)flow.elbo_vs_burnin(target, {8}, r), InvalidArgument);
  CHECK_THROWS_AS((void)flow.elbo_vs_burnin(target, {-1}, r), InvalidArgument);
}

TEST_CASE("burn-in elbo stays zero for a perfect mixture") {
  AugmentedTarget target(make_gauss1d(), MomentumModel(MomentumKind::kLaplace));
  MixFlow flow(plain_ref(1, 2.0, 2.0), std::make_shared<IdentityTransform>(1), 9);
  Rng r = make_stream(718, 0, 0);
  std::vector<long> ms{0, 1, 2, 5, 8};
  for (double v : flow.elbo_vs_burnin(target, ms, r)) {
    CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("burn-in mixture density drops the early components") {
  // translated components at 0..5 with burn-in 2 leave mass on 2..5 only
  Eigen::VectorXd delta(1);
  delta << 1.0;
  auto shift = std::make_shared<testutil::TranslationTransform>(delta);
  MixFlow flow(plain_ref(1, 0.0, 0.05), shift, 6, 2);
  for (double xv : {2.0, 3.3, 4.9, 5.02}) {
    AugmentedState s = state1(xv, 0.4, 0.7);
    std::vector<double> terms;
    for (long n = 2; n < 6; ++n) {
      terms.push_back(normal_log_pdf(s.x[0] - static_cast<double>(n), 0.0, 0.05) +
                      laplace_log_pdf(s.rho[0]));
    }
    double want = lse_of(terms) - std::log(4.0);
    CHECK(std::abs(flow.log_density(s) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("identity-map elbo concentrates on the exact mixture divergence") {
  // with the identity map every mixture length has the same law, so the
  // elbo estimator must average to -KL(q0 || target) for every N
  AugmentedTarget target = gauss_aug();
  for (long n : {1L, 5L, 20L}) {
    MixFlow flow(plain_ref(1), std::make_shared<IdentityTransform>(1), n);
    Rng rng = make_stream(719, n, 0);
    const int reps = 3000;
    std::vector<double> vals(reps);
    for (int i = 0; i < reps; ++i) vals[static_cast<std::size_t>(i)] = flow.estimate_elbo(target, rng);
    double mean = mean_of(vals);
    double se = std::sqrt(sample_variance(vals) / reps);
    CHECK(std::abs(mean + ref::kKlGauss) < 4.0 * se);
  }
}

TEST_CASE("log-density stays finite when every mixture term underflows") {
  Eigen::VectorXd delta(1);
  delta << 1.0;
  auto shift = std::make_shared<testutil::TranslationTransform>(delta);
  const double scale = 1e-3;
  MixFlow flow(plain_ref(1, 0.0, scale), shift, 40);

  auto analytic = [&](const AugmentedState& s) {
    std::vector<double> terms;
    for (long n = 0; n < 40; ++n) {
      terms.push_back(normal_log_pdf(s.x[0] - static_cast<double>(n), 0.0, scale) +
                      laplace_log_pdf(s.rho[0]));
    }
    return lse_of(terms) - std::log(40.0);
  };

  // near the first component the other 39 terms sit beyond exp(-1e5)
  AugmentedState near = state1(2e-4, -0.3, 0.1);
  double got = flow.log_density(near);
  CHECK(std::isfinite(got));
  CHECK(std::abs(got - analytic(near)) <= 1e-10 * std::max(1.0, std::abs(analytic(near))));

  // far away every term underflows; the log scale keeps the value exact
  AugmentedState far = state1(1000.3, 0.5, 0.6);
  double got_far = flow.log_density(far);
  CHECK(std::isfinite(got_far));
  CHECK(got_far < -1e6);
  CHECK(std::abs(got_far - analytic(far)) <= 1e-10 * std::abs(analytic(far)));
}

TEST_CASE("divergence during the inverse walk names the failing application") {
  auto diverge = std::make_shared<testutil::ThresholdDivergeTransform>(3.5);
  MixFlow flow(plain_ref(1), diverge, 10);
  AugmentedState s = state1(0.0, 0.0, 0.5);
  try {
    (void)flow.log_density(s);
    FAIL("expected NumericalDivergence");
  } catch (const NumericalDivergence& e) {
    CHECK(e.step() == 5);  // inputs 0,-1,-2,-3 pass; input -4 trips the limit
    CHECK(std::string(e.what()).find("mixture walk") != std::string::npos);
  }

  Rng rng = make_stream(720, 0, 0);
  try {
    (void)flow.estimate_elbo(gauss_aug(), rng);
    FAIL("expected NumericalDivergence");
  } catch (const NumericalDivergence& e) {
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find("trajectory walk") != std::string::npos);
  }
}

TEST_CASE("replicated elbo summarizes its values") {
  AugmentedTarget target = gauss_aug();
  MixFlow flow(plain_ref(1), ham_flow_1d(0.05, 3), 6);
  Rng rng = make_stream(721, 0, 0);
  ElboStats stats = replicate_elbo(flow, target, 16, rng);
  REQUIRE(stats.values.size() == 16);
  CHECK(stats.mean == doctest::Approx(mean_of(stats.values)).epsilon(1e-15));
  CHECK(stats.std_error ==
        doctest::Approx(std::sqrt(sample_variance(stats.values) / 16.0)).epsilon(1e-12));
  CHECK_THROWS_AS((void)replicate_elbo(flow, target, 0, rng), InvalidArgument);

  Rng r1 = make_stream(722, 0, 0);
  ElboStats one = replicate_elbo(flow, target, 1, r1);
  CHECK(one.std_error == 0.0);
}
